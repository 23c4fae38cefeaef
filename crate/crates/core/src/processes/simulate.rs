//! Gaussian sample paths.
//!
//! Replicate `r` of seed `s` draws from ChaCha8 keyed by `s` on stream
//! `r`, so any replicate can be generated independently of the others.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use super::{ProcessModel, Variant};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::TimeSeries;

/// Clipped circulant eigenvalues beyond this fraction of the largest one
/// produce a warning.
pub const CLIP_WARNING: f64 = 1e-6;

/// Circulant sizes tried before clipping: `2^k ≥ 2n` up to eight times that.
const MAX_EMBED_DOUBLINGS: u32 = 3;

#[derive(Clone)]
enum Engine {
    White {
        sigma: f64,
    },
    Ar {
        phi: Vec<f64>,
        sigma: f64,
        /// Cholesky factor of the stationary covariance of `p` consecutive values.
        start: DMatrix<f64>,
    },
    Circulant {
        /// `sqrt(λ_k / m)` for the circulant eigenvalues `λ_k`.
        amplitude: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

/// Sampler for one model and length, with any set-up work done once.
#[derive(Clone)]
pub struct Simulator {
    model: ProcessModel,
    n: usize,
    engine: Engine,
    clip: f64,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("model", &self.model)
            .field("n", &self.n)
            .field("clip", &self.clip)
            .finish()
    }
}

impl Simulator {
    pub fn new(model: &ProcessModel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "series length must be >= 2, got {n}"
            )));
        }
        let (engine, clip) = match model.variant() {
            &Variant::White { sigma } => (Engine::White { sigma }, 0.0),
            Variant::Ar { phi, sigma } => {
                // Start from the stationary law so no burn-in is needed.
                let acv = model.acv_f64(phi.len())?;
                let p = phi.len();
                let cov = DMatrix::from_fn(p, p, |r, c| acv[r.abs_diff(c)]);
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::Numeric("AR stationary covariance is not positive definite".into())
                })?;
                (
                    Engine::Ar {
                        phi: phi.clone(),
                        sigma: *sigma,
                        start: chol.l(),
                    },
                    0.0,
                )
            }
            Variant::Matern { .. } => circulant(model, n)?,
        };
        Ok(Self {
            model: model.clone(),
            n,
            engine,
            clip,
        })
    }

    pub fn model(&self) -> &ProcessModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest clipped negative circulant eigenvalue relative to the
    /// largest eigenvalue; zero when the embedding was exact.
    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn warning(&self) -> Option<String> {
        (self.clip > CLIP_WARNING).then(|| {
            format!(
                "circulant embedding clipped negative eigenvalues up to {:.3e} of the peak",
                self.clip
            )
        })
    }

    /// Replicate `replicate` of the ensemble keyed by `seed`.
    pub fn sample<T: Real>(&self, seed: u64, replicate: u64) -> Result<TimeSeries<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let n = self.n;
        let x: Vec<f64> = match &self.engine {
            Engine::White { sigma } => (0..n).map(|_| sigma * normal()).collect(),
            Engine::Ar { phi, sigma, start } => {
                let p = phi.len();
                let z: Vec<f64> = (0..p).map(|_| normal()).collect();
                let mut x = vec![0.0; n];
                for r in 0..p.min(n) {
                    x[r] = (0..=r).map(|c| start[(r, c)] * z[c]).sum();
                }
                for t in p..n {
                    let mut v = sigma * normal();
                    for (j, &c) in phi.iter().enumerate() {
                        v += c * x[t - j - 1];
                    }
                    x[t] = v;
                }
                x
            }
            Engine::Circulant { amplitude, fft } => {
                let mut w: Vec<Complex<f64>> = amplitude
                    .iter()
                    .map(|&a| {
                        let re = normal();
                        let im = normal();
                        Complex::new(a * re, a * im)
                    })
                    .collect();
                fft.process(&mut w);
                w[..n].iter().map(|c| c.re).collect()
            }
        };
        TimeSeries::new(
            x.into_iter().map(T::lit).collect(),
            T::lit(self.model.delta()),
        )
    }
}

fn circulant(model: &ProcessModel, n: usize) -> Result<(Engine, f64)> {
    let mut m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    for attempt in 0..=MAX_EMBED_DOUBLINGS {
        let half = m / 2;
        let acv = model.acv_f64(half + 1)?;
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|j| Complex::new(acv[if j <= half { j } else { m - j }], 0.0))
            .collect();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);
        let peak = c.iter().map(|v| v.re).fold(0.0, f64::max);
        let worst = c.iter().map(|v| v.re).fold(0.0, f64::min);
        let clip = if peak > 0.0 { -worst / peak } else { 0.0 };
        if clip <= 1e-12 || attempt == MAX_EMBED_DOUBLINGS {
            let amplitude = c
                .iter()
                .map(|v| (v.re.max(0.0) / m as f64).sqrt())
                .collect();
            return Ok((Engine::Circulant { amplitude, fft }, clip));
        }
        m *= 2;
    }
    unreachable!("loop returns on its last attempt")
}

/// One sample path of length `n`, keyed by `seed`.
pub fn simulate<T: Real>(model: &ProcessModel, n: usize, seed: u64) -> Result<TimeSeries<T>> {
    Simulator::new(model, n)?.sample(seed, 0)
}
