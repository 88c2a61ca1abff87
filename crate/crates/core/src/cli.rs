//! `optqpe` command-line front end.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 0 success, 1 verification failure or runtime error, 2 usage error.
//! CSV: header row, `,` separator, LF line endings, floats as `{:.16e}`
//! (17 significant digits).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{self, DensityCurve};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::protocol::{
    self, canonical_distribution, inverse_qft_reference, ProtocolConfig, StateKind, Streamer, TAU,
};
use crate::sinestate::{self, SineStateParams};
use crate::statevec::{fidelity_up_to_global_phase, StateVector};
use crate::verify::{run_verification, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the default master seed.
pub const SEED_ENV: &str = "OPTQPE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "optqpe",
    version,
    about = "Optimal-state phase estimation with two live control qubits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and sequentially prepared sine-state amplitudes.
    Prepare(PrepareArgs),
    /// Run the invariant suite; exit 1 if any check fails.
    Verify(VerifyArgs),
    /// Exact outcome distribution from all three backends.
    Distribution(DistributionArgs),
    /// Monte Carlo runs of the streaming protocol.
    Simulate(SimulateArgs),
    /// Error densities of the optimal and uniform states.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Optimal,
    Uniform,
}

impl From<Kind> for StateKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Optimal => StateKind::Optimal,
            Kind::Uniform => StateKind::Uniform,
        }
    }
}

/// A single phase or `grid:P` for `P` equispaced phases over `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    Value(f64),
    Grid(usize),
}

impl PhaseSpec {
    pub fn phases(&self) -> Vec<f64> {
        match *self {
            PhaseSpec::Value(x) => vec![x],
            PhaseSpec::Grid(p) => (0..p).map(|i| TAU * i as f64 / p as f64).collect(),
        }
    }
}

impl FromStr for PhaseSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(rest) = s.strip_prefix("grid:") {
            let p: usize = rest
                .parse()
                .map_err(|e| format!("bad grid size {rest:?}: {e}"))?;
            if p == 0 {
                return Err("grid size must be at least 1".into());
            }
            return Ok(PhaseSpec::Grid(p));
        }
        let x: f64 = s.parse().map_err(|e| format!("bad phase {s:?}: {e}"))?;
        if !x.is_finite() {
            return Err("phase must be finite".into());
        }
        Ok(PhaseSpec::Value(x))
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write data here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    pub max_m: u32,
    /// Fault injection: add this to every mu0+ used by the recursion checks.
    #[arg(long, default_value_t = 0.0, hide = true)]
    pub tamper_mu: f64,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DistributionArgs {
    #[arg(long)]
    pub m: u32,
    /// True phase in radians, or `grid:P`.
    #[arg(long, default_value = "0")]
    pub phase: PhaseSpec,
    #[arg(long, value_enum, default_value = "optimal")]
    pub state: Kind,
    #[arg(long)]
    pub covariant: bool,
    /// Grid offset in [0, 2 pi / 2^m); needs --covariant.
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// True phase in radians, or `grid:P` (trial t uses phase t mod P).
    #[arg(long, default_value = "0")]
    pub phase: PhaseSpec,
    #[arg(long, value_enum, default_value = "optimal")]
    pub state: Kind,
    /// Draw a fresh uniform grid offset for every trial.
    #[arg(long)]
    pub covariant: bool,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    pub seed: u64,
    /// Also write one CSV row per trial here.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Maximum index N of the control states.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Float formatting used in every CSV.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b',')
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

fn io_err(e: io::Error) -> Error {
    Error::Internal(format!("io: {e}"))
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Argument(_) | Error::Resource(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn dispatch(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let out = match cmd {
        Command::Prepare(a) => &a.out,
        Command::Verify(a) => &a.out,
        Command::Distribution(a) => &a.out,
        Command::Simulate(a) => &a.out,
        Command::Sweep(a) => &a.out,
    };
    let mut file;
    let sink: &mut dyn Write = match &out.output {
        Some(path) => {
            file = BufWriter::new(File::create(path).map_err(io_err)?);
            &mut file
        }
        None => stdout,
    };
    let code = match cmd {
        Command::Prepare(a) => cmd_prepare(a, sink)?,
        Command::Verify(a) => cmd_verify(a, sink, stderr)?,
        Command::Distribution(a) => cmd_distribution(a, sink, stderr)?,
        Command::Simulate(a) => cmd_simulate(a, sink)?,
        Command::Sweep(a) => cmd_sweep(a, sink)?,
    };
    sink.flush().map_err(io_err)?;
    Ok(code)
}

fn exact_params(m: u32) -> Result<SineStateParams> {
    if !(1..=protocol::MAX_ENUMERATION_QUBITS).contains(&m) {
        return Err(Error::arg(format!(
            "--m must be in 1..={}, got {m}",
            protocol::MAX_ENUMERATION_QUBITS
        )));
    }
    SineStateParams::new(m)
}

/// `n, direct, prepared_re, prepared_im` rows plus the preparation fidelity.
pub fn cmd_prepare(a: &PrepareArgs, out: &mut dyn Write) -> Result<i32> {
    let params = exact_params(a.m)?;
    let direct = sinestate::amplitudes(&params);
    let prepared = protocol::prepare_full(&params)?;
    let fidelity = fidelity_up_to_global_phase(&prepared, &StateVector::from_real(&direct)?)?;
    match a.format {
        Format::Csv => {
            let mut w = csv_writer(&mut *out);
            w.write_record(["n", "direct", "prepared_re", "prepared_im"])
                .map_err(csv_err)?;
            for (n, (&d, z)) in direct.iter().zip(prepared.amplitudes()).enumerate() {
                w.write_record([
                    n.to_string(),
                    fmt_float(d),
                    fmt_float(z.re),
                    fmt_float(z.im),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io_err)?;
            drop(w);
            writeln!(out, "# fidelity,{}", fmt_float(fidelity)).map_err(io_err)?;
        }
        Format::Json => {
            let rows: Vec<_> = direct
                .iter()
                .zip(prepared.amplitudes())
                .enumerate()
                .map(|(n, (&d, z))| json!({"n": n, "direct": d, "prepared_re": z.re, "prepared_im": z.im}))
                .collect();
            let doc = json!({"m": a.m, "fidelity": fidelity, "amplitudes": rows});
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))
                .map_err(io_err)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut opts = VerifyOptions::new(a.max_m);
    opts.mu_perturbation = a.tamper_mu;
    opts.exec = execution(a.sequential);
    let report = run_verification(&opts)?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&report).expect("json")
    )
    .map_err(io_err)?;
    for c in &report.checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        writeln!(
            stderr,
            "{tag} {} (worst {:.3e}, tol {:.1e}, {} cases)",
            c.name, c.worst, c.tolerance, c.cases
        )
        .map_err(io_err)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}

/// `phase, k, estimate, p_enumerate, p_canonical, p_iqft` rows.
pub fn cmd_distribution(
    a: &DistributionArgs,
    out: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let params = exact_params(a.m)?;
    if !a.covariant && a.offset != 0.0 {
        return Err(Error::arg("--offset requires --covariant"));
    }
    let kind: StateKind = a.state.into();
    let dense_ok = params.qubits() <= protocol::MAX_REFERENCE_QUBITS;
    let mut w = csv_writer(&mut *out);
    w.write_record([
        "phase",
        "k",
        "estimate",
        "p_enumerate",
        "p_canonical",
        "p_iqft",
    ])
    .map_err(csv_err)?;
    let mut worst = 0.0f64;
    for phase in a.phase.phases() {
        let base = ProtocolConfig::new(params, phase, kind);
        let config = if a.covariant {
            base.with_offset(a.offset)?
        } else {
            base
        };
        let offset = config.effective_offset();
        let (enumerated, _) = Streamer::new(config)?.enumerate()?;
        let canonical = canonical_distribution(&params, config.phase, offset, kind);
        let dense = if dense_ok {
            Some(inverse_qft_reference(&params, config.phase, offset, kind)?)
        } else {
            None
        };
        worst = worst.max(enumerated.max_abs_diff(&canonical)?);
        if let Some(d) = &dense {
            worst = worst.max(enumerated.max_abs_diff(d)?);
        }
        for k in 0..params.dim() {
            let iqft = dense
                .as_ref()
                .map(|d| fmt_float(d.probabilities[k]))
                .unwrap_or_default();
            w.write_record([
                fmt_float(config.phase),
                k.to_string(),
                fmt_float(enumerated.grid[k]),
                fmt_float(enumerated.probabilities[k]),
                fmt_float(canonical.probabilities[k]),
                iqft,
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    writeln!(stderr, "max backend disagreement: {worst:.3e}").map_err(io_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let params = exact_params(a.m)?;
    if a.trials == 0 {
        return Err(Error::arg("--trials must be at least 1"));
    }
    let kind: StateKind = a.state.into();
    let base = ProtocolConfig::new(params, 0.0, kind).with_seed(a.seed);
    let config = if a.covariant {
        base.with_offset(0.0)?
    } else {
        base
    };
    let phases: Vec<f64> = a
        .phase
        .phases()
        .into_iter()
        .map(protocol::wrap_phase)
        .collect();
    let records = protocol::simulate_phases(&config, &phases, a.trials, execution(a.sequential))?;
    let stats = analysis::stats_from_samples(&records)?;
    let doc = json!({
        "m": a.m,
        "state": kind.as_str(),
        "covariant": a.covariant,
        "trials": a.trials,
        "seed": a.seed,
        "stats": stats,
        "min_holevo_variance": analysis::min_holevo_variance(params.max_index()),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json")).map_err(io_err)?;
    if let Some(path) = &a.trials_csv {
        let file = BufWriter::new(File::create(path).map_err(io_err)?);
        let mut w = csv_writer(file);
        w.write_record(["trial", "phase", "offset", "k", "estimate", "error"])
            .map_err(csv_err)?;
        for (t, r) in records.iter().enumerate() {
            w.write_record([
                t.to_string(),
                fmt_float(r.phase),
                fmt_float(r.offset),
                r.outcome.to_string(),
                fmt_float(r.estimate),
                fmt_float(r.error),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

/// `theta, pdf_optimal, pdf_uniform` on an equispaced grid over `[-pi, pi]`.
pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    if a.n == 0 {
        return Err(Error::arg("--n must be at least 1"));
    }
    if a.points < 2 {
        return Err(Error::arg("--points must be at least 2"));
    }
    let opt = DensityCurve::sample(a.points, |t| analysis::pdf_optimal(t, a.n));
    let uni = DensityCurve::sample(a.points, |t| analysis::pdf_uniform(t, a.n));
    let mut w = csv_writer(out);
    w.write_record(["theta", "pdf_optimal", "pdf_uniform"])
        .map_err(csv_err)?;
    for ((t, o), u) in opt.thetas.iter().zip(&opt.densities).zip(&uni.densities) {
        w.write_record([fmt_float(*t), fmt_float(*o), fmt_float(*u)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("optqpe").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn phase_spec_parsing() {
        assert_eq!("grid:4".parse::<PhaseSpec>().unwrap(), PhaseSpec::Grid(4));
        assert_eq!("1.5".parse::<PhaseSpec>().unwrap(), PhaseSpec::Value(1.5));
        assert!("grid:0".parse::<PhaseSpec>().is_err());
        assert!("abc".parse::<PhaseSpec>().is_err());
        assert_eq!(PhaseSpec::Grid(4).phases()[2], std::f64::consts::PI);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn invalid_m_is_usage_error() {
        let (code, out, err) = run_capture(&["prepare", "--m", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.contains("--m"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_capture(&["sweep", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn offset_without_covariant_rejected() {
        let (code, _, _) = run_capture(&["distribution", "--m", "2", "--offset", "0.1"]);
        assert_eq!(code, EXIT_USAGE);
    }
}
