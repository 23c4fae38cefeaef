//! Debiased Welch estimator: fit blurred rectangular bases to a Welch
//! estimate and report the unblurred coefficients.

mod design;
mod lsq;
mod partition;

pub use design::{blur_autocovariance, build_design, expected_basis, BasisMatrix};
pub use lsq::{nnls, wls_fit, DebiasFit, Dense, CONDITION_WARNING, WEIGHT_FLOOR};
pub use partition::{default_bases, even_partition, log_partition, max_bases, BasisPartition};

use crate::error::{Error, Result};
use crate::estimators::{welch_on_grid, EstimateMeta, EstimatorKind, SpectralEstimate};
use crate::scalar::Real;
use crate::signal::{FrequencyGrid, SegmentPlan, Sided, Taper, TimeSeries};

/// Debiased Welch estimator with its design matrix built once, for
/// repeated use on series sharing `L`, `Δ`, taper and partition.
#[derive(Debug, Clone)]
pub struct DebiasedWelch<T: Real> {
    taper: Taper<T>,
    design: BasisMatrix<T>,
    delta: T,
    nonneg: bool,
    centres: FrequencyGrid<T>,
}

impl<T: Real> DebiasedWelch<T> {
    pub fn new(taper: Taper<T>, part: &BasisPartition<T>, delta: T, nonneg: bool) -> Result<Self> {
        let design = build_design(part, &taper, taper.len(), delta)?;
        let centres = FrequencyGrid::from_omegas(part.centres().to_vec(), Sided::OneSided, delta)?;
        Ok(Self {
            taper,
            design,
            delta,
            nonneg,
            centres,
        })
    }

    pub fn design(&self) -> &BasisMatrix<T> {
        &self.design
    }

    pub fn taper(&self) -> &Taper<T> {
        &self.taper
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    /// Basis centres, where estimates are reported.
    pub fn centres(&self) -> &FrequencyGrid<T> {
        &self.centres
    }

    fn check(&self, ts: &TimeSeries<T>, plan: &SegmentPlan) -> Result<()> {
        if plan.segment_len() != self.taper.len() {
            return Err(Error::invalid(format!(
                "segment length {} does not match the prepared length {}",
                plan.segment_len(),
                self.taper.len()
            )));
        }
        let rel = ((ts.delta() - self.delta) / self.delta).abs();
        if rel > T::lit(1e-12) {
            return Err(Error::invalid(format!(
                "series sampling interval {} differs from the prepared {}",
                ts.delta(),
                self.delta
            )));
        }
        Ok(())
    }

    pub fn fit(&self, ts: &TimeSeries<T>, plan: &SegmentPlan) -> Result<DebiasFit<T>> {
        self.check(ts, plan)?;
        let w = welch_on_grid(ts, plan, &self.taper, self.design.rows())?;
        wls_fit(&w, &self.design, self.nonneg)
    }

    pub fn estimate(&self, ts: &TimeSeries<T>, plan: &SegmentPlan) -> Result<SpectralEstimate<T>> {
        Ok(self.estimate_with_fit(ts, plan)?.0)
    }

    /// Estimate together with the fit it came from.
    pub fn estimate_with_fit(
        &self,
        ts: &TimeSeries<T>,
        plan: &SegmentPlan,
    ) -> Result<(SpectralEstimate<T>, DebiasFit<T>)> {
        let fit = self.fit(ts, plan)?;
        let est = SpectralEstimate::new(
            self.centres.clone(),
            fit.estimates(),
            EstimateMeta {
                estimator: EstimatorKind::Debiased,
                segment_len: plan.segment_len(),
                segments: plan.segments(),
                overlap: plan.overlap(),
                taper: self.taper.kind(),
                bases: Some(fit.coeffs().len()),
                nonneg: Some(self.nonneg),
            },
        )?;
        Ok((est, fit))
    }
}

/// Debiased Welch estimate `â_k B_k(ω_k)` at the centres of `part`.
pub fn debiased_welch<T: Real>(
    ts: &TimeSeries<T>,
    plan: &SegmentPlan,
    taper: &Taper<T>,
    part: &BasisPartition<T>,
    nonneg: bool,
) -> Result<SpectralEstimate<T>> {
    if taper.len() != plan.segment_len() {
        return Err(Error::invalid(format!(
            "taper length {} does not match segment length {}",
            taper.len(),
            plan.segment_len()
        )));
    }
    DebiasedWelch::new(taper.clone(), part, ts.delta(), nonneg)?.estimate(ts, plan)
}
