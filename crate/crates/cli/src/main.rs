//! `spectral`: Welch and debiased Welch spectral estimates, process
//! simulation and Monte Carlo benchmarks from the command line.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 1 for numerical
//! failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_core::debias::{default_bases, even_partition, DebiasedWelch, CONDITION_WARNING};
use spectral_core::estimators::welch;
use spectral_core::harness::{emit_csv, run_ensemble, ExperimentConfig};
use spectral_core::io::{read_partition, read_series, write_series, write_spectrum};
use spectral_core::processes::{ProcessModel, Simulator};
use spectral_core::signal::{make_taper, segment_plan, SegmentPlan, TaperKind, TimeSeries};
use spectral_core::{Error, SpectralEstimate64};

#[derive(Parser)]
#[command(
    name = "spectral",
    version,
    about = "Welch and debiased Welch spectral density estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Welch's averaged periodogram.
    Welch(WelchArgs),
    /// Debiased Welch estimate at basis centres.
    Debias(DebiasArgs),
    /// Simulate a Gaussian process to a series file.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment and write metrics CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// Series file: one number per line, optional `x` header, `#` comments.
    input: PathBuf,
    /// Segment length L.
    #[arg(long, short = 'L')]
    segment_length: usize,
    /// Segment overlap p in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value = "boxcar")]
    taper: TaperKind,
    /// Subtract the sample mean first.
    #[arg(long)]
    demean: bool,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Report frequencies in Hz instead of rad/s.
    #[arg(long)]
    hz: bool,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WelchArgs {
    #[command(flatten)]
    seg: SegmentArgs,
}

#[derive(Args)]
struct DebiasArgs {
    #[command(flatten)]
    seg: SegmentArgs,
    /// Number of evenly spaced bases (default ⌈(L−1)/4⌉).
    #[arg(long, conflicts_with = "partition_file")]
    k: Option<usize>,
    /// File of `centre width` lines (rad/s) defining the bases.
    #[arg(long)]
    partition_file: Option<PathBuf>,
    /// Drop the non-negativity constraint on the coefficients.
    #[arg(long)]
    allow_negative: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    White,
    Ar4,
    Ar,
    Matern,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    /// Random seed; SPECTRAL_SEED overrides it when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sigma: Option<f64>,
    /// Matérn inverse length scale.
    #[arg(long)]
    lambda: Option<f64>,
    /// Matérn smoothness.
    #[arg(long)]
    nu: Option<f64>,
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    phi: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Config { .. } => 2,
        Error::IllConditioned { .. } | Error::Numeric(_) => 1,
        Error::Replicate { source, .. } => exit_code(source),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn load(seg: &SegmentArgs) -> Result<(TimeSeries<f64>, SegmentPlan), Error> {
    let samples = read_series::<f64>(&seg.input)?;
    let ts = TimeSeries::new(samples, seg.delta)
        .map_err(|e| usage(format!("{}: {e}", seg.input.display())))?;
    let ts = if seg.demean { ts.demeaned() } else { ts };
    let plan = segment_plan(ts.len(), seg.segment_length, seg.overlap)?;
    Ok((ts, plan))
}

fn write_output(est: &SpectralEstimate64, hz: bool, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let io = |source| Error::Io {
                path: path.to_path_buf(),
                source,
            };
            let file = std::fs::File::create(path).map_err(io)?;
            write_spectrum(est, hz, std::io::BufWriter::new(file)).map_err(io)
        }
        None => write_spectrum(est, hz, std::io::stdout().lock()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn cmd_welch(args: &WelchArgs) -> Result<(), Error> {
    let (ts, plan) = load(&args.seg)?;
    let taper = make_taper(args.seg.taper, plan.segment_len())?;
    let est = welch(&ts, &plan, &taper)?;
    write_output(&est, args.seg.hz, args.seg.out.as_deref())
}

fn cmd_debias(args: &DebiasArgs) -> Result<(), Error> {
    let (ts, plan) = load(&args.seg)?;
    let len = plan.segment_len();
    let part = match &args.partition_file {
        Some(path) => read_partition::<f64>(path)?,
        None => even_partition(
            args.k.unwrap_or_else(|| default_bases(len)),
            len,
            ts.delta(),
        )?,
    };
    let taper = make_taper(args.seg.taper, len)?;
    let estimator = DebiasedWelch::new(taper, &part, ts.delta(), !args.allow_negative)?;
    let (est, fit) = estimator.estimate_with_fit(&ts, &plan)?;
    if fit.is_ill_conditioned() {
        eprintln!(
            "warning: weighted normal matrix condition estimate {:.3e} exceeds {CONDITION_WARNING:.0e}",
            fit.condition()
        );
    }
    write_output(&est, args.seg.hz, args.seg.out.as_deref())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let seed = match std::env::var("SPECTRAL_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("SPECTRAL_SEED=`{v}` is not an unsigned integer")))?,
        Err(_) => args.seed,
    };
    let sigma = args.sigma.unwrap_or(1.0);
    let matern_only = |name: &str, v: Option<f64>| match v {
        Some(_) => Err(usage(format!("--{name} applies only to --model matern"))),
        None => Ok(()),
    };
    if !matches!(args.model, ModelName::Ar) && !args.phi.is_empty() {
        return Err(usage("--phi applies only to --model ar"));
    }
    let model = match args.model {
        ModelName::White => {
            matern_only("lambda", args.lambda)?;
            matern_only("nu", args.nu)?;
            ProcessModel::white(sigma, args.delta)?
        }
        ModelName::Ar4 => {
            matern_only("lambda", args.lambda)?;
            matern_only("nu", args.nu)?;
            ProcessModel::ar(
                spectral_core::processes::AR4_PHI.to_vec(),
                sigma,
                args.delta,
            )?
        }
        ModelName::Ar => {
            matern_only("lambda", args.lambda)?;
            matern_only("nu", args.nu)?;
            if args.phi.is_empty() {
                return Err(usage("--model ar needs --phi"));
            }
            ProcessModel::ar(args.phi.clone(), sigma, args.delta)?
        }
        ModelName::Matern => ProcessModel::matern(
            sigma,
            args.lambda.unwrap_or(0.1),
            args.nu.unwrap_or(4.0 / 3.0),
            args.delta,
        )?,
    };
    let sim = Simulator::new(&model, args.n)?;
    if let Some(w) = sim.warning() {
        eprintln!("warning: {w}");
    }
    let ts: TimeSeries<f64> = sim.sample(seed, 0)?;
    match &args.out {
        Some(path) => write_series(ts.samples(), path),
        None => {
            let mut out = std::io::BufWriter::new(std::io::stdout().lock());
            ts.samples()
                .iter()
                .try_for_each(|v| writeln!(out, "{v:e}"))
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    if args.workers == 0 {
        return Err(usage("--workers must be >= 1"));
    }
    let records = run_ensemble(&cfg, args.workers)?;
    emit_csv(&records, &args.out)?;
    println!(
        "{:<14} {:>5} {:>6} {:>5} {:>6} {:<18} {:>14}",
        "estimator", "M", "L", "p", "alpha", "metric", "value"
    );
    for r in &records {
        let alpha = r
            .alpha
            .map(|a| format!("{a:.2}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<14} {:>5} {:>6} {:>5.2} {:>6} {:<18} {:>14.6e}",
            r.estimator, r.segments, r.segment_len, r.overlap, alpha, r.metric, r.value
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Welch(a) => cmd_welch(a),
        Command::Debias(a) => cmd_debias(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spectral_core::harness::parse_csv;
    use spectral_core::io::read_spectrum;

    fn spectral(args: &[&str]) -> Result<(), Error> {
        let cli = Cli::try_parse_from(std::iter::once("spectral").chain(args.iter().copied()))
            .map_err(|e| usage(e.to_string()))?;
        run(&cli)
    }

    fn code(res: Result<(), Error>) -> (u8, String) {
        let e = res.unwrap_err();
        (exit_code(&e), e.to_string())
    }

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn series(dir: &Path, name: &str, n: usize) -> PathBuf {
        let text: String = (0..n)
            .map(|i| {
                format!(
                    "{}\n",
                    ((i * 7919) % 113) as f64 / 17.0 - 3.0 + (i as f64 * 0.3).sin()
                )
            })
            .collect();
        write(dir, name, &text)
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    #[test]
    fn welch_on_four_samples() {
        let dir = tempfile::tempdir().unwrap();
        let input = write(dir.path(), "x.txt", "x\n1\n-1\n2\n0.5\n");
        let out = dir.path().join("w.csv");
        let res = spectral(&["welch", s(&input), "-L", "4", "--out", s(&out)]);
        res.unwrap();
        let t = read_spectrum(&out).unwrap();
        assert_eq!(t.omegas.len(), 2);
        assert_eq!(t.meta("M"), Some("1"));
        assert_eq!(t.meta("units"), Some("rad/s"));
        assert!((t.omegas[1] - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn overlapping_segments_and_hz() {
        let dir = tempfile::tempdir().unwrap();
        let input = series(dir.path(), "x.txt", 6144);
        let out = dir.path().join("w.csv");
        let res = spectral(&[
            "welch",
            s(&input),
            "-L",
            "256",
            "--overlap",
            "0.5",
            "--taper",
            "hann",
            "--hz",
            "--delta",
            "0.5",
            "--out",
            s(&out),
        ]);
        res.unwrap();
        let t = read_spectrum(&out).unwrap();
        assert_eq!(t.meta("M"), Some("47"));
        assert_eq!(t.meta("taper"), Some("hann"));
        assert_eq!(t.meta("units"), Some("Hz"));
        assert_eq!(t.omegas.len(), 128);
        assert!((t.omegas[127] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_input_names_path() {
        let res = spectral(&["welch", "/no/such/series.txt", "-L", "8"]);
        let (c, msg) = code(res);
        assert_eq!(c, 2);
        assert!(msg.contains("/no/such/series.txt"), "{msg}");
    }

    #[test]
    fn malformed_series_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let input = write(dir.path(), "bad.txt", "1\n2\nthree\n4\n");
        let res = spectral(&["welch", s(&input), "-L", "2"]);
        let (c, msg) = code(res);
        assert_eq!(c, 2);
        assert!(msg.contains("bad.txt:3"), "{msg}");
    }

    #[test]
    fn debias_default_bases() {
        let dir = tempfile::tempdir().unwrap();
        let input = series(dir.path(), "x.txt", 8192);
        let out = dir.path().join("d.csv");
        let res = spectral(&["debias", s(&input), "-L", "512", "--out", s(&out)]);
        res.unwrap();
        let t = read_spectrum(&out).unwrap();
        assert_eq!(t.meta("K"), Some("128"));
        assert_eq!(t.meta("nonneg"), Some("true"));
        assert_eq!(t.meta("estimator"), Some("debiased"));
        assert_eq!(t.omegas.len(), 128);
        assert!(t.psd.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn debias_with_partition_file() {
        let dir = tempfile::tempdir().unwrap();
        let input = series(dir.path(), "x.txt", 4096);
        let edges: Vec<f64> = (0..=10)
            .map(|i| std::f64::consts::PI * (i as f64 / 10.0).powi(2))
            .collect();
        let text: String = edges
            .windows(2)
            .map(|e| format!("{} {}\n", (e[0] + e[1]) / 2.0, e[1] - e[0]))
            .collect();
        let part = write(dir.path(), "part.txt", &format!("# centre width\n{text}"));
        let out = dir.path().join("d.csv");
        let res = spectral(&[
            "debias",
            s(&input),
            "-L",
            "256",
            "--partition-file",
            s(&part),
            "--allow-negative",
            "--out",
            s(&out),
        ]);
        res.unwrap();
        let t = read_spectrum(&out).unwrap();
        assert_eq!(t.omegas.len(), 10);
        assert_eq!(t.meta("nonneg"), Some("false"));
    }

    #[test]
    fn debias_rejects_bad_basis_count() {
        let dir = tempfile::tempdir().unwrap();
        let input = series(dir.path(), "x.txt", 4096);
        let res = spectral(&["debias", s(&input), "-L", "512", "--k", "300"]);
        let (c, msg) = code(res);
        assert_eq!(c, 2);
        assert!(msg.contains("256"), "{msg}");
        let part = write(dir.path(), "p.txt", "1.0 2.0\n");
        let res = spectral(&[
            "debias",
            s(&input),
            "-L",
            "512",
            "--k",
            "4",
            "--partition-file",
            s(&part),
        ]);
        assert_eq!(code(res).0, 2);
    }

    #[test]
    fn segment_longer_than_series() {
        let dir = tempfile::tempdir().unwrap();
        let input = series(dir.path(), "x.txt", 100);
        let res = spectral(&["welch", s(&input), "-L", "128"]);
        assert_eq!(code(res).0, 2);
    }

    #[test]
    fn simulate_is_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        let c = dir.path().join("c.txt");
        for (p, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
            let res = spectral(&[
                "simulate",
                "--model",
                "ar4",
                "--n",
                "32768",
                "--seed",
                seed,
                "--out",
                s(p),
            ]);
            res.unwrap();
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text.lines().count(), 32768);
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        assert_ne!(text, std::fs::read_to_string(&c).unwrap());

        let d = dir.path().join("d.txt");
        std::env::set_var("SPECTRAL_SEED", "5");
        let res = spectral(&[
            "simulate",
            "--model",
            "ar4",
            "--n",
            "32768",
            "--seed",
            "0",
            "--out",
            s(&d),
        ]);
        std::env::remove_var("SPECTRAL_SEED");
        res.unwrap();
        assert_eq!(text, std::fs::read_to_string(&d).unwrap());
    }

    #[test]
    fn simulate_rejects_misplaced_parameters() {
        let res = spectral(&["simulate", "--model", "white", "--n", "16", "--nu", "1.5"]);
        assert_eq!(code(res).0, 2);
        let res = spectral(&["simulate", "--model", "ar", "--n", "16", "--phi", "1.2"]);
        assert_eq!(code(res).0, 2);
    }

    #[test]
    fn bench_writes_metric_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "sweep.cfg",
            "model = ar4\nsweep = over_M\nM = 8, 16, 32, 64, 128, 256\nL = 16\np = 0, 0.5\nreplicates = 2\nseed = 1\n",
        );
        let out = dir.path().join("m.csv");
        let res = spectral(&["bench", "--config", s(&cfg), "--out", s(&out)]);
        res.unwrap();
        // 6 M × 2 p × 2 estimators × 5 metrics.
        let recs = parse_csv(&out).unwrap();
        assert_eq!(recs.len(), 120);
        assert!(recs
            .iter()
            .any(|r| r.estimator == "debiased" && r.segments == 256 && r.overlap == 0.5));
    }

    #[test]
    fn bench_unknown_key_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "bad.cfg",
            "model = ar4\nsweep = over_M\nM = 8\nL = 16\nreplicates = 2\nspeed = 3\n",
        );
        let res = spectral(&[
            "bench",
            "--config",
            s(&cfg),
            "--out",
            s(&dir.path().join("m.csv")),
        ]);
        let (c, msg) = code(res);
        assert_eq!(c, 2);
        assert!(msg.contains("speed"), "{msg}");
    }
}
