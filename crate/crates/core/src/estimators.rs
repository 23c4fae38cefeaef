//! Periodogram, tapered periodogram and Welch's averaged estimator.
//!
//! Values are densities in the two-sided convention `f(ω) = Δ Σ γ(τ) e^{-iωτΔ}`,
//! reported at non-negative frequencies without folding.

use std::fmt;

use crate::error::{Error, Result};
use crate::fft::RealDft;
use crate::scalar::Real;
use crate::signal::{
    fourier_grid, FrequencyGrid, SegmentPlan, Sided, Taper, TaperKind, TimeSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Periodogram,
    Welch,
    Debiased,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Periodogram => "periodogram",
            EstimatorKind::Welch => "welch",
            EstimatorKind::Debiased => "debiased",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How an estimate was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMeta {
    pub estimator: EstimatorKind,
    pub segment_len: usize,
    pub segments: usize,
    pub overlap: f64,
    pub taper: TaperKind,
    /// Number of bases, for debiased estimates.
    pub bases: Option<usize>,
    pub nonneg: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate<T: Real> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
    meta: EstimateMeta,
}

impl<T: Real> SpectralEstimate<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>, meta: EstimateMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid(format!(
                "estimate has {} values for {} frequencies",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, meta })
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn omegas(&self) -> &[T] {
        self.grid.omegas()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn meta(&self) -> &EstimateMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Squared modulus can only go negative through rounding; anything below
/// this floor indicates a bug upstream.
const NEGATIVE_FLOOR: f64 = -1e-12;

fn clamp_nonneg<T: Real>(v: T) -> T {
    debug_assert!(v >= T::lit(NEGATIVE_FLOOR), "negative power {v}");
    v.max(T::zero())
}

/// Tapered periodogram `Δ |Σ_t h_t x_t e^{-iωtΔ}|²`.
///
/// Uses an FFT when `grid` is a Fourier grid of the series length and a
/// direct sum otherwise.
pub fn periodogram<T: Real>(
    ts: &TimeSeries<T>,
    taper: &Taper<T>,
    grid: &FrequencyGrid<T>,
) -> Result<SpectralEstimate<T>> {
    let n = ts.len();
    if taper.len() != n {
        return Err(Error::invalid(format!(
            "taper length {} does not match series length {n}",
            taper.len()
        )));
    }
    let delta = ts.delta();
    let values = match (grid.fourier_len(), grid.bins()) {
        (Some(len), Some(bins)) if len == n => {
            let mut dft = RealDft::new(n);
            let spec = dft.transform_weighted(ts.samples(), taper.coeffs());
            bins.iter()
                .map(|&b| clamp_nonneg(delta * spec[b].norm_sqr()))
                .collect()
        }
        _ => grid
            .omegas()
            .iter()
            .map(|&w| {
                let (mut re, mut im) = (T::zero(), T::zero());
                for (t, (&x, &h)) in ts.samples().iter().zip(taper.coeffs()).enumerate() {
                    let phase = w * T::from_usize_lossy(t) * delta;
                    re = re + h * x * phase.cos();
                    im = im - h * x * phase.sin();
                }
                clamp_nonneg(delta * (re * re + im * im))
            })
            .collect(),
    };
    SpectralEstimate::new(
        grid.clone(),
        values,
        EstimateMeta {
            estimator: EstimatorKind::Periodogram,
            segment_len: n,
            segments: 1,
            overlap: 0.0,
            taper: taper.kind(),
            bases: None,
            nonneg: None,
        },
    )
}

fn check_plan<T: Real>(ts: &TimeSeries<T>, plan: &SegmentPlan, taper: &Taper<T>) -> Result<()> {
    if taper.len() != plan.segment_len() {
        return Err(Error::invalid(format!(
            "taper length {} does not match segment length {}",
            taper.len(),
            plan.segment_len()
        )));
    }
    if plan.used() > ts.len() {
        return Err(Error::invalid(format!(
            "segment plan needs {} samples but the series has {}",
            plan.used(),
            ts.len()
        )));
    }
    Ok(())
}

/// Welch's estimator on every DFT bin of length `L`: the mean of the `M`
/// segment periodograms, indexed by bin.
pub(crate) fn welch_bins<T: Real>(
    ts: &TimeSeries<T>,
    plan: &SegmentPlan,
    taper: &Taper<T>,
) -> Result<Vec<T>> {
    check_plan(ts, plan, taper)?;
    let len = plan.segment_len();
    let mut dft = RealDft::new(len);
    let mut acc = vec![T::zero(); len];
    let x = ts.samples();
    for range in plan.segment_ranges() {
        let spec = dft.transform_weighted(&x[range], taper.coeffs());
        for (a, c) in acc.iter_mut().zip(spec) {
            *a = *a + c.norm_sqr();
        }
    }
    let scale = ts.delta() / T::from_usize_lossy(plan.segments());
    Ok(acc.into_iter().map(|a| clamp_nonneg(a * scale)).collect())
}

/// Welch's estimator evaluated on a Fourier grid of length `L`.
pub fn welch_on_grid<T: Real>(
    ts: &TimeSeries<T>,
    plan: &SegmentPlan,
    taper: &Taper<T>,
    grid: &FrequencyGrid<T>,
) -> Result<SpectralEstimate<T>> {
    let bins = match (grid.fourier_len(), grid.bins()) {
        (Some(len), Some(bins)) if len == plan.segment_len() => bins,
        _ => {
            return Err(Error::invalid(format!(
                "Welch estimates live on the Fourier grid of length {}",
                plan.segment_len()
            )))
        }
    };
    let all = welch_bins(ts, plan, taper)?;
    SpectralEstimate::new(
        grid.clone(),
        bins.iter().map(|&b| all[b]).collect(),
        welch_meta(plan, taper),
    )
}

/// Welch's estimator on the one-sided Fourier grid of length `L`.
pub fn welch<T: Real>(
    ts: &TimeSeries<T>,
    plan: &SegmentPlan,
    taper: &Taper<T>,
) -> Result<SpectralEstimate<T>> {
    let grid = fourier_grid(plan.segment_len(), ts.delta(), Sided::OneSided)?;
    welch_on_grid(ts, plan, taper, &grid)
}

fn welch_meta<T: Real>(plan: &SegmentPlan, taper: &Taper<T>) -> EstimateMeta {
    EstimateMeta {
        estimator: EstimatorKind::Welch,
        segment_len: plan.segment_len(),
        segments: plan.segments(),
        overlap: plan.overlap(),
        taper: taper.kind(),
        bases: None,
        nonneg: None,
    }
}
