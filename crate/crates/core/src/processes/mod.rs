//! Reference Gaussian processes: spectra, autocovariances, simulation and
//! the exact expected Welch estimate.
//!
//! Model parameters and internal arithmetic are `f64`; results are
//! converted to the caller's scalar type.

mod bessel;
mod simulate;

pub use bessel::bessel_k;
pub use simulate::{simulate, Simulator, CLIP_WARNING};

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::debias::blur_autocovariance;
use crate::error::{Error, Result};
use crate::estimators::{EstimateMeta, EstimatorKind, SpectralEstimate};
use crate::fft::RealDft;
use crate::scalar::Real;
use crate::signal::{fourier_grid, taper_autocorr, FrequencyGrid, SegmentPlan, Sided, Taper};

/// AR(4) coefficients of the benchmark model with twin spectral peaks.
pub const AR4_PHI: [f64; 4] = [2.7607, -3.8106, 2.6535, -0.9238];

/// Smallest grid used to turn an AR spectrum into autocovariances.
const AR_ACV_GRID: usize = 1 << 18;

/// Explicit alias terms on each side for sampled Matérn spectra.
const MATERN_ALIASES: i32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    White { sigma: f64 },
    Ar { phi: Vec<f64>, sigma: f64 },
    Matern { sigma: f64, lambda: f64, nu: f64 },
}

/// Stationary Gaussian process sampled every `delta` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    variant: Variant,
    delta: f64,
    /// Largest modulus among the AR companion eigenvalues.
    radius: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl ProcessModel {
    pub fn white(sigma: f64, delta: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("delta", delta)?;
        Ok(Self {
            variant: Variant::White { sigma },
            delta,
            radius: 0.0,
        })
    }

    /// `X_t = Σ_j φ_j X_{t−j} + σ ε_t`; rejected unless stationary.
    pub fn ar(phi: Vec<f64>, sigma: f64, delta: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("delta", delta)?;
        if phi.is_empty() || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "AR coefficients must be a non-empty list of finite numbers",
            ));
        }
        let p = phi.len();
        let companion = DMatrix::from_fn(p, p, |r, c| {
            if r == 0 {
                phi[c]
            } else if r == c + 1 {
                1.0
            } else {
                0.0
            }
        });
        let radius = companion
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !(radius < 1.0) {
            return Err(Error::invalid(format!(
                "AR coefficients {phi:?} are not stationary (root modulus {radius:.6} >= 1)"
            )));
        }
        Ok(Self {
            variant: Variant::Ar { phi, sigma },
            delta,
            radius,
        })
    }

    /// Spectrum `σ²/(ω² + λ²)^{ν+1/2}` in continuous time.
    pub fn matern(sigma: f64, lambda: f64, nu: f64, delta: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("lambda", lambda)?;
        check_positive("nu", nu)?;
        check_positive("delta", delta)?;
        Ok(Self {
            variant: Variant::Matern { sigma, lambda, nu },
            delta,
            radius: 0.0,
        })
    }

    /// AR(4) benchmark with unit innovation variance.
    pub fn ar4(delta: f64) -> Result<Self> {
        Self::ar(AR4_PHI.to_vec(), 1.0, delta)
    }

    /// Matérn with `σ = 1`, `λ = 0.1`, `ν = 4/3`.
    pub fn matern_default(delta: f64) -> Result<Self> {
        Self::matern(1.0, 0.1, 4.0 / 3.0, delta)
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Spectral radius of the AR recursion; 0 for other models.
    pub fn spectral_radius(&self) -> f64 {
        self.radius
    }

    /// Spectral density of the sampled process at `omega` (rad/s).
    ///
    /// The Matérn density is folded over the sampling band:
    /// `Σ_k f(ω + 2πk/Δ)`, with the far tails summed in closed form.
    pub fn spectrum_at(&self, omega: f64) -> f64 {
        let delta = self.delta;
        match &self.variant {
            Variant::White { sigma } => sigma * sigma * delta,
            Variant::Ar { phi, sigma } => {
                let (mut re, mut im) = (1.0, 0.0);
                for (j, &p) in phi.iter().enumerate() {
                    let arg = omega * (j + 1) as f64 * delta;
                    re -= p * arg.cos();
                    im += p * arg.sin();
                }
                sigma * sigma * delta / (re * re + im * im)
            }
            &Variant::Matern { sigma, lambda, nu } => {
                let f = |w: f64| sigma * sigma * (w * w + lambda * lambda).powf(-(nu + 0.5));
                let step = 2.0 * PI / delta;
                let mut total = f(omega);
                for k in 1..=MATERN_ALIASES {
                    total += f(omega + k as f64 * step) + f(omega - k as f64 * step);
                }
                let edge = (MATERN_ALIASES as f64 + 0.5) * step;
                let tail = |w: f64| sigma * sigma / step * w.powf(-2.0 * nu) / (2.0 * nu);
                total + tail(edge + omega) + tail(edge - omega)
            }
        }
    }

    /// True spectral density on `grid`.
    pub fn true_spectrum<T: Real>(&self, grid: &FrequencyGrid<T>) -> Result<Vec<T>> {
        self.check_delta(grid.delta().to_f64_lossy())?;
        Ok(grid
            .omegas()
            .iter()
            .map(|w| T::lit(self.spectrum_at(w.to_f64_lossy())))
            .collect())
    }

    fn check_delta(&self, delta: f64) -> Result<()> {
        if ((delta - self.delta) / self.delta).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "sampling interval {delta} does not match the model's {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Autocovariance `γ(τ)` at integer lags `τ = 0..lags`.
    pub fn true_acv<T: Real>(&self, lags: usize) -> Result<Vec<T>> {
        Ok(self.acv_f64(lags)?.into_iter().map(T::lit).collect())
    }

    pub(crate) fn acv_f64(&self, lags: usize) -> Result<Vec<f64>> {
        match &self.variant {
            Variant::White { sigma } => {
                let mut out = vec![0.0; lags];
                if let Some(first) = out.first_mut() {
                    *first = sigma * sigma;
                }
                Ok(out)
            }
            Variant::Ar { .. } => Ok(self.ar_acv(lags)),
            &Variant::Matern { sigma, lambda, nu } => (0..lags)
                .map(|tau| matern_acv(sigma, lambda, nu, tau as f64 * self.delta))
                .collect(),
        }
    }

    /// Inverse DFT of the spectrum on a fine grid of `N` frequencies:
    /// `γ(τ) ≈ (1/(NΔ)) Σ_j f(2πj/(NΔ)) cos(2πjτ/N)`.
    fn ar_acv(&self, lags: usize) -> Vec<f64> {
        let n = AR_ACV_GRID.max((8 * lags).next_power_of_two());
        let step = 2.0 * PI / (n as f64 * self.delta);
        let f: Vec<f64> = (0..n).map(|j| self.spectrum_at(j as f64 * step)).collect();
        let mut dft = RealDft::new(n);
        let scale = 1.0 / (n as f64 * self.delta);
        dft.transform(&f)[..lags]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

/// `γ(s) = σ²/(√π Γ(ν+½)) (|s|/(2λ))^ν K_ν(λ|s|)`, the inverse transform
/// of `σ²/(ω² + λ²)^{ν+1/2}`.
fn matern_acv(sigma: f64, lambda: f64, nu: f64, s: f64) -> Result<f64> {
    let s = s.abs();
    let pre = sigma * sigma / (PI.sqrt() * libm::tgamma(nu + 0.5));
    if s == 0.0 {
        return Ok(pre * libm::tgamma(nu) / (2.0 * lambda.powf(2.0 * nu)));
    }
    let x = lambda * s;
    // K_ν underflows far out; the covariance is zero to double precision.
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(pre * (s / (2.0 * lambda)).powf(nu) * bessel_k(nu, x)?)
}

/// Exact expectation of Welch's estimator,
/// `2Δ Re{Σ_τ κ(τ) γ(τ) e^{−iωτΔ}} − Δ γ(0)`, on the one-sided Fourier
/// grid of the segment length.
pub fn expected_welch<T: Real>(
    model: &ProcessModel,
    plan: &SegmentPlan,
    taper: &Taper<T>,
) -> Result<SpectralEstimate<T>> {
    let len = plan.segment_len();
    if taper.len() != len {
        return Err(Error::invalid(format!(
            "taper length {} does not match segment length {len}",
            taper.len()
        )));
    }
    let delta = T::lit(model.delta);
    let acv: Vec<T> = model.true_acv(len)?;
    let all = blur_autocovariance(&acv, &taper_autocorr(taper), delta)?;
    let grid = fourier_grid(len, delta, Sided::OneSided)?;
    let values = grid
        .bins()
        .expect("Fourier grid")
        .iter()
        .map(|&b| all[b].max(T::zero()))
        .collect();
    SpectralEstimate::new(
        grid,
        values,
        EstimateMeta {
            estimator: EstimatorKind::Welch,
            segment_len: len,
            segments: plan.segments(),
            overlap: plan.overlap(),
            taper: taper.kind(),
            bases: None,
            nonneg: None,
        },
    )
}
