//! Plain-text formats: series files, partition files and spectrum CSV.
//!
//! A series file holds one number per line, with an optional first line
//! `x` and `#` comments. A partition file holds `centre width` pairs in
//! rad/s, one basis per line. Spectrum CSV starts with `# key=value`
//! metadata lines followed by the header `omega,psd`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::debias::BasisPartition;
use crate::error::{Error, Result};
use crate::estimators::SpectralEstimate;
use crate::scalar::Real;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    }
}

/// Content of a line with any `#` comment removed.
fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_series<T: Real + FromStr>(text: &str, origin: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut seen_content = false;
    for (i, line) in text.lines().enumerate() {
        let s = strip(line);
        if s.is_empty() {
            continue;
        }
        if !seen_content && s == "x" {
            seen_content = true;
            continue;
        }
        seen_content = true;
        let v: T = s
            .parse()
            .map_err(|_| parse_err(origin, i + 1, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(origin, i + 1, format!("`{s}` is not finite")));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_series<T: Real + FromStr>(path: &Path) -> Result<Vec<T>> {
    parse_series(&read(path)?, path)
}

pub fn write_series<T: Real>(samples: &[T], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for v in samples {
        writeln!(out, "{v:e}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn parse_partition<T: Real + FromStr>(text: &str, origin: &Path) -> Result<BasisPartition<T>> {
    let mut centres = Vec::new();
    let mut widths = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let s = strip(line);
        if s.is_empty() {
            continue;
        }
        let fields: Vec<&str> = s.split_whitespace().collect();
        let [c, w] = fields[..] else {
            return Err(parse_err(
                origin,
                i + 1,
                format!("expected `centre width`, got `{s}`"),
            ));
        };
        let num = |f: &str| -> Result<T> {
            f.parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(origin, i + 1, format!("`{f}` is not a finite number")))
        };
        let (c, w) = (num(c)?, num(w)?);
        // Check contiguity as we go so the error points at the right line.
        if let Err(e) = BasisPartition::from_cells(
            centres.iter().copied().chain([c]).collect(),
            widths.iter().copied().chain([w]).collect(),
        ) {
            return Err(parse_err(origin, i + 1, e.to_string()));
        }
        centres.push(c);
        widths.push(w);
        last_line = i + 1;
    }
    if centres.is_empty() {
        return Err(parse_err(
            origin,
            last_line.max(1),
            "no bases in partition file".into(),
        ));
    }
    BasisPartition::from_cells(centres, widths)
        .map_err(|e| parse_err(origin, last_line, e.to_string()))
}

pub fn read_partition<T: Real + FromStr>(path: &Path) -> Result<BasisPartition<T>> {
    parse_partition(&read(path)?, path)
}

pub fn write_partition<T: Real>(part: &BasisPartition<T>, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(out, "# centre width (rad/s)").map_err(io)?;
    for (c, w) in part.centres().iter().zip(part.widths()) {
        writeln!(out, "{c:e} {w:e}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes `omega,psd` rows, preceded by `# key=value` metadata. With
/// `hz`, frequencies are divided by 2π.
pub fn write_spectrum<T: Real, W: Write>(
    est: &SpectralEstimate<T>,
    hz: bool,
    mut out: W,
) -> std::io::Result<()> {
    let m = est.meta();
    writeln!(out, "# estimator={}", m.estimator)?;
    writeln!(out, "# L={}", m.segment_len)?;
    writeln!(out, "# M={}", m.segments)?;
    writeln!(out, "# p={}", m.overlap)?;
    writeln!(out, "# taper={}", m.taper)?;
    if let Some(k) = m.bases {
        writeln!(out, "# K={k}")?;
    }
    if let Some(nn) = m.nonneg {
        writeln!(out, "# nonneg={nn}")?;
    }
    writeln!(out, "# units={}", if hz { "Hz" } else { "rad/s" })?;
    writeln!(out, "# density=two-sided, reported at positive frequencies")?;
    writeln!(out, "omega,psd")?;
    let scale = if hz {
        T::one() / (T::lit(2.0) * T::PI())
    } else {
        T::one()
    };
    for (&w, &v) in est.omegas().iter().zip(est.values()) {
        writeln!(out, "{:.16e},{:.16e}", w * scale, v)?;
    }
    out.flush()
}

/// Parsed spectrum CSV: metadata pairs and `(omega, psd)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub meta: Vec<(String, String)>,
    pub omegas: Vec<f64>,
    pub psd: Vec<f64>,
}

impl SpectrumTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn parse_spectrum(text: &str, origin: &Path) -> Result<SpectrumTable> {
    let mut table = SpectrumTable {
        meta: Vec::new(),
        omegas: Vec::new(),
        psd: Vec::new(),
    };
    let mut header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                table
                    .meta
                    .push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !header {
            if line != "omega,psd" {
                return Err(parse_err(
                    origin,
                    i + 1,
                    format!("expected header `omega,psd`, got `{line}`"),
                ));
            }
            header = true;
            continue;
        }
        let (w, v) = line.split_once(',').ok_or_else(|| {
            parse_err(origin, i + 1, format!("expected `omega,psd`, got `{line}`"))
        })?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(origin, i + 1, format!("`{s}` is not a number")))
        };
        table.omegas.push(num(w)?);
        table.psd.push(num(v)?);
    }
    if !header {
        return Err(parse_err(origin, 1, "missing `omega,psd` header".into()));
    }
    Ok(table)
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumTable> {
    parse_spectrum(&read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debias::log_partition;
    use crate::estimators::welch;
    use crate::signal::{make_taper, segment_plan, TaperKind, TimeSeries};

    #[test]
    fn series_with_header_and_comments() {
        let v: Vec<f64> =
            parse_series("# recorded\nx\n1.5\n\n-2e-3  # tail\n3\n", Path::new("s")).unwrap();
        assert_eq!(v, vec![1.5, -2e-3, 3.0]);
    }

    #[test]
    fn series_errors_carry_line() {
        let e = parse_series::<f64>("x\n1\nfoo\n", Path::new("s.txt")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(e.to_string().starts_with("s.txt:3"));
        assert!(parse_series::<f64>("1\nx\n", Path::new("s")).is_err());
        assert!(parse_series::<f64>("nan\n", Path::new("s")).is_err());
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.txt");
        let v = vec![1.0 / 3.0, -7.25e-12, 1e300];
        write_series(&v, &p).unwrap();
        assert_eq!(read_series::<f64>(&p).unwrap(), v);
    }

    #[test]
    fn partition_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("part.txt");
        let part = log_partition::<f64>(10, 0.01, 3.0).unwrap();
        write_partition(&part, &p).unwrap();
        let back: BasisPartition<f64> = read_partition(&p).unwrap();
        assert_eq!(back.len(), 10);
        for (a, b) in back.centres().iter().zip(part.centres()) {
            assert!((a - b).abs() < 1e-14 * b);
        }
        let gap = "0.5 1.0\n2.0 1.0\n";
        assert!(matches!(
            parse_partition::<f64>(gap, Path::new("g")),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = "# c w\n0.5 1.0\n1.5\n";
        assert!(matches!(
            parse_partition::<f64>(bad, Path::new("b")),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_partition::<f64>("# nothing\n", Path::new("e")).is_err());
    }

    #[test]
    fn spectrum_round_trip() {
        let ts = TimeSeries::new((0..64).map(|i| ((i * 7) % 5) as f64).collect(), 0.5).unwrap();
        let plan = segment_plan(64, 16, 0.5).unwrap();
        let est = welch(&ts, &plan, &make_taper(TaperKind::Hann, 16).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_spectrum(&est, false, &mut buf).unwrap();
        let table = parse_spectrum(std::str::from_utf8(&buf).unwrap(), Path::new("w")).unwrap();
        assert_eq!(table.omegas, est.omegas());
        assert_eq!(table.psd, est.values());
        assert_eq!(table.meta("M"), Some("7"));
        assert_eq!(table.meta("taper"), Some("hann"));
    }
}
