//! Spectral density estimation: periodograms, Welch's estimator and its
//! debiased variant, reference process models and a Monte Carlo harness.
//!
//! Estimation code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod debias;
pub mod error;
pub mod estimators;
mod fft;
pub mod harness;
pub mod io;
pub mod processes;
pub mod scalar;
pub mod signal;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TimeSeries64 = signal::TimeSeries<f64>;
pub type TimeSeries32 = signal::TimeSeries<f32>;
pub type Taper64 = signal::Taper<f64>;
pub type Taper32 = signal::Taper<f32>;
pub type FrequencyGrid64 = signal::FrequencyGrid<f64>;
pub type FrequencyGrid32 = signal::FrequencyGrid<f32>;
pub type SpectralEstimate64 = estimators::SpectralEstimate<f64>;
pub type SpectralEstimate32 = estimators::SpectralEstimate<f32>;
pub type BasisPartition64 = debias::BasisPartition<f64>;
pub type BasisPartition32 = debias::BasisPartition<f32>;
pub type BasisMatrix64 = debias::BasisMatrix<f64>;
pub type BasisMatrix32 = debias::BasisMatrix<f32>;
pub type DebiasFit64 = debias::DebiasFit<f64>;
pub type DebiasFit32 = debias::DebiasFit<f32>;
pub type DebiasedWelch64 = debias::DebiasedWelch<f64>;
pub type DebiasedWelch32 = debias::DebiasedWelch<f32>;
