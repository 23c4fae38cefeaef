//! Monte Carlo comparison of Welch and debiased Welch against a known
//! spectrum.

mod config;
mod csv;

pub use config::{alpha_segment_len, EstimatorChoice, ExperimentConfig, Sweep, SweepPoint};
pub use csv::{emit_csv, parse_csv, parse_csv_str, write_csv, CSV_HEADER};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::debias::{
    default_bases, even_partition, log_partition, max_bases, BasisPartition, DebiasedWelch,
};
use crate::error::{Error, Result};
use crate::estimators::welch_on_grid;
use crate::processes::{ProcessModel, Simulator};
use crate::signal::{
    fourier_grid, make_taper, FrequencyGrid, SegmentPlan, Sided, Taper, TaperKind,
};

/// Values are floored here before taking logs.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    MeanLogAbsBias,
    MeanLogSd,
    MeanLogRmse,
    Imse,
    WallTimeS,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::MeanLogAbsBias,
        Metric::MeanLogSd,
        Metric::MeanLogRmse,
        Metric::Imse,
        Metric::WallTimeS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanLogAbsBias => "mean_log_abs_bias",
            Metric::MeanLogSd => "mean_log_sd",
            Metric::MeanLogRmse => "mean_log_rmse",
            Metric::Imse => "imse",
            Metric::WallTimeS => "wall_time_s",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub estimator: String,
    pub segments: usize,
    pub segment_len: usize,
    pub overlap: f64,
    pub alpha: Option<f64>,
    pub metric: Metric,
    pub value: f64,
}

/// Mean of natural logs, after flooring at [`LOG_FLOOR`].
pub fn mean_log_aggregate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty set of values"));
    }
    if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::invalid(format!("cannot take the log of {v}")));
    }
    Ok(values.iter().map(|v| v.max(LOG_FLOOR).ln()).sum::<f64>() / values.len() as f64)
}

/// `Σ (estimate − truth)² · width` over the grid.
pub fn imse(estimate: &[f64], truth: &[f64], widths: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.len() != widths.len() {
        return Err(Error::invalid(format!(
            "misaligned grids: {} estimates, {} truth values, {} widths",
            estimate.len(),
            truth.len(),
            widths.len()
        )));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .zip(widths)
        .map(|((e, t), w)| (e - t) * (e - t) * w)
        .sum())
}

/// Sample skewness and excess kurtosis (population moments).
pub fn skewness_kurtosis(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let m2 = m(2);
    (m(3) / m2.powf(1.5), m(4) / (m2 * m2) - 3.0)
}

/// Per-frequency ensemble summaries of one estimator at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub omegas: Vec<f64>,
    pub truth: Vec<f64>,
    pub widths: Vec<f64>,
    pub mean: Vec<f64>,
    /// Population standard deviation over replicates.
    pub sd: Vec<f64>,
    /// `|mean − truth|`.
    pub abs_bias: Vec<f64>,
    /// `sqrt(mean((estimate − truth)²))`.
    pub rmse: Vec<f64>,
    /// Ensemble mean of the integrated squared error.
    pub imse: f64,
    /// Mean seconds per estimator call.
    pub wall_time_s: f64,
    /// Replicate estimates, `values[r][j]`.
    pub values: Vec<Vec<f64>>,
}

impl EnsembleStats {
    pub fn from_values(
        omegas: Vec<f64>,
        truth: Vec<f64>,
        widths: Vec<f64>,
        values: Vec<Vec<f64>>,
        wall_time_s: f64,
    ) -> Result<Self> {
        let reps = values.len();
        if reps == 0 {
            return Err(Error::invalid("no replicates"));
        }
        let k = truth.len();
        if omegas.len() != k || widths.len() != k || values.iter().any(|v| v.len() != k) {
            return Err(Error::invalid(
                "replicate estimates are not aligned with the truth",
            ));
        }
        let r = reps as f64;
        let mut mean = vec![0.0; k];
        for v in &values {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= r);
        let mut var = vec![0.0; k];
        let mut mse = vec![0.0; k];
        for v in &values {
            for j in 0..k {
                var[j] += (v[j] - mean[j]).powi(2);
                mse[j] += (v[j] - truth[j]).powi(2);
            }
        }
        let mut total_ise = 0.0;
        for v in &values {
            total_ise += imse(v, &truth, &widths)?;
        }
        Ok(Self {
            sd: var.iter().map(|s| (s / r).sqrt()).collect(),
            abs_bias: mean
                .iter()
                .zip(&truth)
                .map(|(m, t)| (m - t).abs())
                .collect(),
            rmse: mse.iter().map(|s| (s / r).sqrt()).collect(),
            imse: total_ise / r,
            omegas,
            truth,
            widths,
            mean,
            wall_time_s,
            values,
        })
    }

    pub fn metric(&self, metric: Metric) -> Result<f64> {
        match metric {
            Metric::MeanLogAbsBias => mean_log_aggregate(&self.abs_bias),
            Metric::MeanLogSd => mean_log_aggregate(&self.sd),
            Metric::MeanLogRmse => mean_log_aggregate(&self.rmse),
            Metric::Imse => Ok(self.imse),
            Metric::WallTimeS => Ok(self.wall_time_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    /// Even bases; `None` uses the default count for the segment length.
    Even(Option<usize>),
    /// Log-spaced bases over `band`, by default from half the first
    /// Fourier frequency to Nyquist.
    Log {
        bases: usize,
        band: Option<(f64, f64)>,
    },
}

impl PartitionSpec {
    pub fn build(&self, segment_len: usize, delta: f64) -> Result<BasisPartition<f64>> {
        match *self {
            PartitionSpec::Even(k) => even_partition(
                k.unwrap_or_else(|| default_bases(segment_len)),
                segment_len,
                delta,
            ),
            PartitionSpec::Log { bases, band } => {
                let (lo, hi) = band.unwrap_or((
                    std::f64::consts::PI / (segment_len as f64 * delta),
                    std::f64::consts::PI / delta,
                ));
                log_partition(bases, lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Welch,
    Debiased {
        partition: PartitionSpec,
        nonneg: bool,
    },
}

enum Prepared {
    Welch {
        taper: Taper<f64>,
        grid: FrequencyGrid<f64>,
    },
    Debiased(Box<DebiasedWelch<f64>>),
}

impl Prepared {
    fn new(spec: &EstimatorSpec, kind: TaperKind, segment_len: usize, delta: f64) -> Result<Self> {
        let taper = make_taper(kind, segment_len)?;
        Ok(match spec {
            EstimatorSpec::Welch => Prepared::Welch {
                taper,
                grid: welch_metric_grid(segment_len, delta)?,
            },
            EstimatorSpec::Debiased { partition, nonneg } => {
                let part = partition.build(segment_len, delta)?;
                Prepared::Debiased(Box::new(DebiasedWelch::new(taper, &part, delta, *nonneg)?))
            }
        })
    }

    fn grid_and_widths(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Prepared::Welch { taper, grid } => {
                (grid.omegas().to_vec(), welch_cell_widths(taper.len(), grid))
            }
            Prepared::Debiased(d) => {
                let part = d.design().partition();
                (part.centres().to_vec(), part.widths().to_vec())
            }
        }
    }

    fn estimate(
        &self,
        ts: &crate::signal::TimeSeries<f64>,
        plan: &SegmentPlan,
    ) -> Result<Vec<f64>> {
        match self {
            Prepared::Welch { taper, grid } => {
                Ok(welch_on_grid(ts, plan, taper, grid)?.into_values())
            }
            Prepared::Debiased(d) => Ok(d.estimate(ts, plan)?.into_values()),
        }
    }
}

/// One-sided Fourier grid on which Welch estimates are scored.
pub fn welch_metric_grid(segment_len: usize, delta: f64) -> Result<FrequencyGrid<f64>> {
    fourier_grid(segment_len, delta, Sided::OneSided)
}

/// Width of the part of each Fourier cell inside `(0, π/Δ]`: `2π/(LΔ)`,
/// halved at Nyquist.
pub fn welch_cell_widths(segment_len: usize, grid: &FrequencyGrid<f64>) -> Vec<f64> {
    let nyquist = std::f64::consts::PI / grid.delta();
    let w = 2.0 * nyquist / segment_len as f64;
    grid.omegas()
        .iter()
        .map(|&om| {
            if om >= nyquist * (1.0 - 1e-12) {
                w / 2.0
            } else {
                w
            }
        })
        .collect()
}

/// Simulates `replicates` series of length `plan.n()` and scores one
/// estimator on them. Replicate `r` uses stream `r` of `seed`.
pub fn run_point(
    model: &ProcessModel,
    plan: &SegmentPlan,
    taper: TaperKind,
    spec: &EstimatorSpec,
    replicates: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<EnsembleStats> {
    let sim = Simulator::new(model, plan.n())?;
    let prepared = Prepared::new(spec, taper, plan.segment_len(), model.delta())?;
    let runs: Vec<(Vec<f64>, f64)> = pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let wrap = |e: Error| Error::Replicate {
                    replicate: r,
                    source: Box::new(e),
                };
                let ts = sim.sample::<f64>(seed, r as u64).map_err(wrap)?;
                let start = Instant::now();
                let v = prepared.estimate(&ts, plan).map_err(wrap)?;
                Ok((v, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (omegas, widths) = prepared.grid_and_widths();
    let truth = omegas.iter().map(|&w| model.spectrum_at(w)).collect();
    let wall = runs.iter().map(|(_, t)| t).sum::<f64>() / replicates as f64;
    EnsembleStats::from_values(
        omegas,
        truth,
        widths,
        runs.into_iter().map(|(v, _)| v).collect(),
        wall,
    )
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))
}

/// Estimators scored at each sweep point, with their report labels.
pub fn estimator_specs(cfg: &ExperimentConfig, segment_len: usize) -> Vec<(String, EstimatorSpec)> {
    let mut out = Vec::new();
    for &choice in &cfg.estimators {
        match (choice, &cfg.sweep) {
            (EstimatorChoice::Welch, _) => out.push(("welch".to_string(), EstimatorSpec::Welch)),
            (
                EstimatorChoice::Debiased,
                Sweep::Compression {
                    log_bases, band, ..
                },
            ) => {
                out.push((
                    "debiased".to_string(),
                    EstimatorSpec::Debiased {
                        partition: PartitionSpec::Even(Some(
                            cfg.bases.unwrap_or_else(|| max_bases(segment_len)),
                        )),
                        nonneg: cfg.nonneg,
                    },
                ));
                out.push((
                    "debiased_log".to_string(),
                    EstimatorSpec::Debiased {
                        partition: PartitionSpec::Log {
                            bases: *log_bases,
                            band: *band,
                        },
                        nonneg: cfg.nonneg,
                    },
                ));
            }
            (EstimatorChoice::Debiased, _) => out.push((
                "debiased".to_string(),
                EstimatorSpec::Debiased {
                    partition: PartitionSpec::Even(cfg.bases),
                    nonneg: cfg.nonneg,
                },
            )),
        }
    }
    out
}

/// Runs every sweep point and estimator of `cfg` on `workers` threads.
///
/// Output does not depend on `workers` apart from `wall_time_s`.
pub fn run_ensemble(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let pool = thread_pool(workers)?;
    let mut records = Vec::new();
    for point in cfg.points()? {
        let plan = point.plan;
        for (label, spec) in estimator_specs(cfg, plan.segment_len()) {
            let stats = run_point(
                &cfg.model,
                &plan,
                cfg.taper,
                &spec,
                cfg.replicates,
                cfg.seed,
                &pool,
            )?;
            for metric in Metric::ALL {
                if metric == Metric::WallTimeS && !cfg.timing {
                    continue;
                }
                records.push(MetricRecord {
                    estimator: label.clone(),
                    segments: plan.segments(),
                    segment_len: plan.segment_len(),
                    overlap: plan.overlap(),
                    alpha: point.alpha,
                    metric,
                    value: stats.metric(metric)?,
                });
            }
        }
    }
    Ok(records)
}
