//! Experiment configuration as flat `key = value` text.
//!
//! ```text
//! # Welch vs debiased Welch as the number of segments grows
//! model = ar4
//! sweep = over_M
//! M = 8, 16, 32, 64, 128, 256
//! L = 1024
//! p = 0, 0.5
//! replicates = 200
//! seed = 1
//! taper = boxcar
//! estimators = welch, debiased
//! ```
//!
//! Keys: `model` (`white`, `ar`, `ar4`, `matern`), `sigma`, `lambda`,
//! `nu`, `phi`, `delta`, `n`, `sweep` (`over_M`, `over_alpha`,
//! `compression`), `M`, `L`, `p`, `alpha`, `K`, `K_log`, `band`,
//! `replicates`, `seed`, `taper`, `estimators`, `nonneg`, `timing`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::processes::ProcessModel;
use crate::signal::{segment_plan, SegmentPlan, TaperKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Welch,
    Debiased,
}

impl EstimatorChoice {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorChoice::Welch => "welch",
            EstimatorChoice::Debiased => "debiased",
        }
    }
}

impl FromStr for EstimatorChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "welch" => Ok(Self::Welch),
            "debiased" => Ok(Self::Debiased),
            other => Err(format!(
                "unknown estimator `{other}` (expected welch or debiased)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Fixed `L`; each `M` uses the record length `(M−1)S + L`.
    OverM {
        segments: Vec<usize>,
        segment_len: usize,
        overlaps: Vec<f64>,
    },
    /// Fixed `n`, `p = 0`, `L = round(n^α)`.
    OverAlpha { alphas: Vec<f64> },
    /// Log-spaced bases against even bases at one `(n, L, p)`.
    Compression {
        segment_len: usize,
        overlap: f64,
        log_bases: usize,
        band: Option<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ProcessModel,
    /// Record length; derived per point for `over_M`.
    pub n: Option<usize>,
    pub sweep: Sweep,
    pub replicates: usize,
    pub estimators: Vec<EstimatorChoice>,
    pub taper: TaperKind,
    pub seed: u64,
    /// Number of even bases; `None` picks the default for each `L`.
    pub bases: Option<usize>,
    pub nonneg: bool,
    /// Record `wall_time_s`; timings make output non-reproducible.
    pub timing: bool,
}

/// One sweep point: a segmentation plus its `α` where applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub plan: SegmentPlan,
    pub alpha: Option<f64>,
}

const KEYS: &[&str] = &[
    "model",
    "sigma",
    "lambda",
    "nu",
    "phi",
    "delta",
    "n",
    "sweep",
    "M",
    "L",
    "p",
    "alpha",
    "K",
    "K_log",
    "band",
    "replicates",
    "seed",
    "taper",
    "estimators",
    "nonneg",
    "timing",
];

struct Entries {
    map: BTreeMap<String, String>,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<V: FromStr>(&self, key: &str) -> Result<Option<V>>
    where
        V::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<V>()
                    .map_err(|e| config_err(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn require<V: FromStr>(&self, key: &str) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| config_err(key, "missing"))
    }

    fn list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>>
    where
        V::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                let items: Vec<&str> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect();
                if items.is_empty() {
                    return Err(config_err(key, "empty list"));
                }
                items
                    .into_iter()
                    .map(|s| {
                        s.parse::<V>()
                            .map_err(|e| config_err(key, format!("cannot parse `{s}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn reject(&self, key: &str, why: &str) -> Result<()> {
        if self.map.contains_key(key) {
            Err(config_err(key, format!("not used {why}")))
        } else {
            Ok(())
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses config text; `origin` is used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: PathBuf::from(origin),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(parse_err(format!("unknown key `{key}`")));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }
        }
        Self::from_entries(&Entries { map })
    }

    fn from_entries(e: &Entries) -> Result<Self> {
        let delta: f64 = e.parse("delta")?.unwrap_or(1.0);
        let model_name: String = e.require("model")?;
        let wrap =
            |key: &str, r: Result<ProcessModel>| r.map_err(|err| config_err(key, err.to_string()));
        let model = match model_name.as_str() {
            "white" => {
                e.reject("phi", "by the white model")?;
                wrap(
                    "sigma",
                    ProcessModel::white(e.parse("sigma")?.unwrap_or(1.0), delta),
                )?
            }
            "ar4" => {
                e.reject("phi", "by the ar4 preset")?;
                let sigma = e.parse("sigma")?.unwrap_or(1.0);
                wrap(
                    "phi",
                    ProcessModel::ar(crate::processes::AR4_PHI.to_vec(), sigma, delta),
                )?
            }
            "ar" => {
                let phi = e.list("phi")?.ok_or_else(|| config_err("phi", "missing"))?;
                wrap(
                    "phi",
                    ProcessModel::ar(phi, e.parse("sigma")?.unwrap_or(1.0), delta),
                )?
            }
            "matern" => {
                e.reject("phi", "by the matern model")?;
                wrap(
                    "model",
                    ProcessModel::matern(
                        e.parse("sigma")?.unwrap_or(1.0),
                        e.parse("lambda")?.unwrap_or(0.1),
                        e.parse("nu")?.unwrap_or(4.0 / 3.0),
                        delta,
                    ),
                )?
            }
            other => return Err(config_err("model", format!("unknown model `{other}`"))),
        };
        if model_name != "matern" {
            e.reject("lambda", "outside the matern model")?;
            e.reject("nu", "outside the matern model")?;
        }

        let n: Option<usize> = e.parse("n")?;
        let sweep_name: String = e.require("sweep")?;
        let sweep = match sweep_name.as_str() {
            "over_M" => {
                e.reject("n", "by over_M (the record length follows from M, L and p)")?;
                e.reject("alpha", "by over_M")?;
                Sweep::OverM {
                    segments: e.list("M")?.ok_or_else(|| config_err("M", "missing"))?,
                    segment_len: e.require("L")?,
                    overlaps: e.list("p")?.unwrap_or_else(|| vec![0.0]),
                }
            }
            "over_alpha" => {
                e.reject("L", "by over_alpha (L = round(n^alpha))")?;
                e.reject("M", "by over_alpha")?;
                if let Some(p) = e.list::<f64>("p")? {
                    if p != [0.0] {
                        return Err(config_err("p", "over_alpha uses p = 0"));
                    }
                }
                Sweep::OverAlpha {
                    alphas: e
                        .list("alpha")?
                        .ok_or_else(|| config_err("alpha", "missing"))?,
                }
            }
            "compression" => {
                e.reject("M", "by compression")?;
                e.reject("alpha", "by compression")?;
                let band = match e.list::<f64>("band")? {
                    None => None,
                    Some(v) if v.len() == 2 => Some((v[0], v[1])),
                    Some(_) => return Err(config_err("band", "expected `omega_min, omega_max`")),
                };
                let overlap = match e.list::<f64>("p")? {
                    None => 0.0,
                    Some(v) if v.len() == 1 => v[0],
                    Some(_) => return Err(config_err("p", "compression takes a single overlap")),
                };
                Sweep::Compression {
                    segment_len: e.require("L")?,
                    overlap,
                    log_bases: e.require("K_log")?,
                    band,
                }
            }
            other => return Err(config_err("sweep", format!("unknown sweep `{other}`"))),
        };
        if !matches!(sweep, Sweep::Compression { .. }) {
            e.reject("K_log", "outside the compression sweep")?;
            e.reject("band", "outside the compression sweep")?;
        }

        let estimators: Vec<EstimatorChoice> = e
            .list("estimators")?
            .unwrap_or_else(|| vec![EstimatorChoice::Welch, EstimatorChoice::Debiased]);
        let cfg = ExperimentConfig {
            model,
            n,
            sweep,
            replicates: e.require("replicates")?,
            estimators,
            taper: e.parse("taper")?.unwrap_or(TaperKind::Boxcar),
            seed: e.parse("seed")?.unwrap_or(0),
            bases: e.parse("K")?,
            nonneg: e.parse("nonneg")?.unwrap_or(true),
            timing: e.parse("timing")?.unwrap_or(true),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks ranges and that every sweep point is realisable.
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(config_err(
                "replicates",
                format!("must be >= 2, got {}", self.replicates),
            ));
        }
        if self.estimators.is_empty() {
            return Err(config_err("estimators", "no estimators selected"));
        }
        for (i, a) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(a) {
                return Err(config_err(
                    "estimators",
                    format!("`{}` listed twice", a.name()),
                ));
            }
        }
        if let Sweep::Compression { .. } = self.sweep {
            if self.bases.is_some() && !self.estimators.contains(&EstimatorChoice::Debiased) {
                return Err(config_err(
                    "K",
                    "set but the debiased estimator is not selected",
                ));
            }
        }
        if let Sweep::Compression { log_bases, .. } = self.sweep {
            if log_bases == 0 {
                return Err(config_err("K_log", "must be >= 1"));
            }
        }
        let points = self.points()?;
        if points.is_empty() {
            return Err(config_err("sweep", "no sweep points"));
        }
        if let Some(k) = self.bases {
            for pt in &points {
                let max = crate::debias::max_bases(pt.plan.segment_len());
                if k == 0 || k > max {
                    return Err(config_err(
                        "K",
                        format!(
                            "must lie in 1..={max} for L = {}, got {k}",
                            pt.plan.segment_len()
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sweep points in the order they are run and reported.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let need_n = |key: &str| {
            self.n
                .ok_or_else(|| config_err("n", format!("required by {key}")))
        };
        match &self.sweep {
            Sweep::OverM {
                segments,
                segment_len,
                overlaps,
            } => {
                let mut out = Vec::new();
                for &p in overlaps {
                    for &m in segments {
                        let plan = SegmentPlan::with_segments(*segment_len, m, p)
                            .map_err(|err| config_err("M", err.to_string()))?;
                        out.push(SweepPoint { plan, alpha: None });
                    }
                }
                Ok(out)
            }
            Sweep::OverAlpha { alphas } => {
                let n = need_n("over_alpha")?;
                alphas
                    .iter()
                    .map(|&a| {
                        if !(a > 0.0 && a <= 1.0) {
                            return Err(config_err(
                                "alpha",
                                format!("must lie in (0, 1], got {a}"),
                            ));
                        }
                        let len = alpha_segment_len(n, a);
                        let plan = segment_plan(n, len, 0.0)
                            .map_err(|err| config_err("alpha", err.to_string()))?;
                        Ok(SweepPoint {
                            plan,
                            alpha: Some(a),
                        })
                    })
                    .collect()
            }
            Sweep::Compression {
                segment_len,
                overlap,
                ..
            } => {
                let n = need_n("compression")?;
                let plan = segment_plan(n, *segment_len, *overlap)
                    .map_err(|err| config_err("L", err.to_string()))?;
                Ok(vec![SweepPoint { plan, alpha: None }])
            }
        }
    }
}

/// `L = round(n^α)`, at least 2.
pub fn alpha_segment_len(n: usize, alpha: f64) -> usize {
    ((n as f64).powf(alpha).round() as usize).max(2)
}
