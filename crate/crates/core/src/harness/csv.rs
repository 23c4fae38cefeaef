//! Metrics CSV: `estimator,M,L,p,alpha,metric,value`, one record per
//! line, floats in `{:.16e}` so they parse back to the same bits. `alpha`
//! is empty when the sweep has none.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Metric, MetricRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "estimator,M,L,p,alpha,metric,value";

pub fn write_csv<W: Write>(records: &[MetricRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let alpha = r.alpha.map(|a| format!("{a:.16e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:.16e},{},{},{:.16e}",
            r.estimator, r.segments, r.segment_len, r.overlap, alpha, r.metric, r.value
        )?;
    }
    out.flush()
}

pub fn emit_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(records, std::io::BufWriter::new(file)).map_err(io)
}

pub fn parse_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv_str(&text, path)
}

pub fn parse_csv_str(text: &str, origin: &Path) -> Result<Vec<MetricRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        _ => return Err(err(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let ln = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err(ln, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|e| err(ln, format!("{what}: {e}")))
        };
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|e| err(ln, format!("{what}: {e}")))
        };
        out.push(MetricRecord {
            estimator: f[0].to_string(),
            segments: int(f[1], "M")?,
            segment_len: int(f[2], "L")?,
            overlap: num(f[3], "p")?,
            alpha: if f[4].is_empty() {
                None
            } else {
                Some(num(f[4], "alpha")?)
            },
            metric: f[5].parse::<Metric>().map_err(|e| err(ln, e))?,
            value: num(f[6], "value")?,
        });
    }
    Ok(out)
}
