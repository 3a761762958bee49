use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use pgt_core::bounds::{
    bound_table, error_exponent, huffman_expected_length, ml_error_bound, mutual_info_t1,
    source_entropy, BoundReport,
};
use pgt_core::design::{
    bernoulli_matrix, chengdu_matrix, identity_matrix, is_disjunct, is_error_tolerant_disjunct,
    read_matrix, TestMatrix,
};
use pgt_core::dist::{Regime, DEFAULT_EPSILON};
use pgt_core::harness::{self, ExperimentConfig, Scheme};
use pgt_core::{ErrorMode, TruncatedPoisson};

#[derive(Parser)]
#[command(name = "pgt", version, about = "Poisson probabilistic group testing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run of a nonadaptive design and its decoder.
    SimulateNonadaptive(NonadaptiveArgs),
    /// Monte Carlo run of the staged semi-adaptive algorithm.
    SimulateSemiadaptive(SemiadaptiveArgs),
    /// All bounds that apply to (lambda, n), as CSV.
    Bounds(BoundsArgs),
    /// Brute-force check that a stored matrix is disjunct (or error tolerant with --v).
    CheckDisjunct(CheckArgs),
    /// Source entropy and exact Huffman expected length.
    Huffman(ModelArgs),
    /// Error exponent, its slope at zero, and optionally the ML error bound.
    Exponent(ExponentArgs),
    /// Runs a JSON array of experiment configurations and writes one CSV row each.
    Sweep(SweepArgs),
    /// Builds a test matrix and writes it in text or binary form.
    Design(DesignArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_parser = positive_f64)]
    lambda: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NonadaptiveScheme {
    Method1,
    Method1Noisy,
    Method2,
    Individual,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliErrorMode {
    Exactly,
    UpTo,
}

#[derive(Args)]
struct CommonRunArgs {
    #[arg(long, value_parser = positive_f64)]
    lambda: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Master seed; required here or in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with `ExperimentConfig` fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write one JSON object per trial to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct NonadaptiveArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[arg(long, value_enum)]
    scheme: Option<NonadaptiveScheme>,
    /// Tolerated flips for method1-noisy.
    #[arg(long)]
    v: Option<u64>,
    /// `unbounded:EPS` or `bounded:K`.
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    /// Test count replacing the formula value.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: Option<u64>,
    #[arg(long, value_enum)]
    error_mode: Option<CliErrorMode>,
    /// One matrix for all trials.
    #[arg(long)]
    fixed_matrix: bool,
}

#[derive(Args)]
struct SemiadaptiveArgs {
    #[command(flatten)]
    common: CommonRunArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_regime, default_value = "unbounded:0.1")]
    regime: Regime,
    #[arg(long, default_value_t = 0)]
    v: u64,
    /// Slack of the counting lower bound.
    #[arg(long, value_parser = open_unit_f64, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    delta: usize,
    #[arg(long)]
    v: Option<usize>,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long, value_parser = unit_f64)]
    rho: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    i: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    d: u64,
    #[arg(long, value_parser = open_unit_f64)]
    p: f64,
    /// With --n, also evaluate the ML error bound for m tests.
    #[arg(long, requires = "n")]
    m: Option<u64>,
    #[arg(long, requires = "m")]
    n: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON array of experiment configurations.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignMethod {
    Bernoulli,
    Chengdu,
    Identity,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    method: DesignMethod,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Rows (bernoulli).
    #[arg(long)]
    m: Option<u64>,
    /// Entry rate (bernoulli) or success probability (chengdu).
    #[arg(long, value_parser = open_unit_f64)]
    p: Option<f64>,
    /// Target disjunctness (chengdu).
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Packed binary instead of text.
    #[arg(long)]
    binary: bool,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn unit_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1], got '{s}'")),
    }
}

fn open_unit_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got '{s}'")),
    }
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: pgt_core::Error| e.to_string())
}

/// Failure kinds mapped to exit codes 1 (domain) and 2 (usage).
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<pgt_core::Error> for Failure {
    fn from(e: pgt_core::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateNonadaptive(a) => simulate_nonadaptive(a),
        Command::SimulateSemiadaptive(a) => simulate(&a.common, Map::new(), Some(Scheme::SemiAdaptive)),
        Command::Bounds(a) => bounds(a),
        Command::CheckDisjunct(a) => check_disjunct(a),
        Command::Huffman(a) => huffman(a),
        Command::Exponent(a) => exponent(a),
        Command::Sweep(a) => sweep(a),
        Command::Design(a) => design(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("config fields serialize")
}

fn read_config_object(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Usage(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(Failure::Usage(format!("{}: {e}", path.display()))),
    }
}

fn simulate_nonadaptive(a: NonadaptiveArgs) -> CliResult {
    let mut flags = Map::new();
    if let Some(scheme) = a.scheme {
        let scheme = match scheme {
            NonadaptiveScheme::Method1 => Scheme::Method1,
            NonadaptiveScheme::Method1Noisy => Scheme::Method1Noisy {
                v: a.v.ok_or_else(|| Failure::Usage("method1-noisy needs --v".into()))?,
            },
            NonadaptiveScheme::Method2 => Scheme::Method2,
            NonadaptiveScheme::Individual => Scheme::Individual,
        };
        flags.insert("scheme".into(), to_value(scheme));
    }
    if let Some(r) = a.regime {
        flags.insert("regime".into(), to_value(r));
    }
    if let Some(m) = a.m {
        flags.insert("m_override".into(), to_value(m));
    }
    if let Some(mode) = a.error_mode {
        let mode = match mode {
            CliErrorMode::Exactly => ErrorMode::ExactlyV,
            CliErrorMode::UpTo => ErrorMode::UpToV,
        };
        flags.insert("error_mode".into(), to_value(mode));
    }
    if a.fixed_matrix {
        flags.insert("fixed_matrix".into(), Value::Bool(true));
    }
    simulate(&a.common, flags, None)
}

fn simulate(common: &CommonRunArgs, mut flags: Map<String, Value>, forced: Option<Scheme>) -> CliResult {
    let mut merged = match &common.config {
        Some(path) => read_config_object(path)?,
        None => Map::new(),
    };
    if let Some(s) = forced {
        flags.insert("scheme".into(), to_value(s));
    }
    if let Some(v) = common.lambda {
        flags.insert("lambda".into(), to_value(v));
    }
    if let Some(v) = common.n {
        flags.insert("n".into(), to_value(v));
    }
    if let Some(v) = common.trials {
        flags.insert("trials".into(), to_value(v));
    }
    if let Some(v) = common.seed {
        flags.insert("seed".into(), to_value(v));
    }
    merged.extend(flags);
    for key in ["lambda", "n", "trials", "seed", "scheme"] {
        if !merged.contains_key(key) {
            return Err(Failure::Usage(format!("missing required setting '{key}' (flag or config)")));
        }
    }
    let config: ExperimentConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::Usage(format!("invalid configuration: {e}")))?;
    if forced.is_some() && config.scheme != Scheme::SemiAdaptive {
        return Err(Failure::Usage("config scheme must be semiadaptive here".into()));
    }
    if forced.is_none() && !config.scheme.is_nonadaptive() {
        return Err(Failure::Usage("use simulate-semiadaptive for the staged scheme".into()));
    }

    let (report, trials) = harness::run_traced(&config)?;
    if let Some(path) = &common.trace {
        let file = File::create(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
        harness::write_trace(&trials, BufWriter::new(file))?;
    }
    harness::write_csv(std::slice::from_ref(&report), io::stdout().lock())?;
    Ok(())
}

fn write_bound_rows(reports: &[BoundReport]) -> CliResult {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["name", "value", "unit", "assumptions"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.value.to_string(),
            r.unit.to_string(),
            r.assumptions.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn bounds(a: BoundsArgs) -> CliResult {
    let model = TruncatedPoisson::new(a.model.lambda, a.model.n)?;
    write_bound_rows(&bound_table(&model, &a.regime, a.v, a.epsilon)?)
}

fn huffman(a: ModelArgs) -> CliResult {
    let model = TruncatedPoisson::new(a.lambda, a.n)?;
    write_bound_rows(&[source_entropy(&model), huffman_expected_length(&model)?])
}

fn exponent(a: ExponentArgs) -> CliResult {
    let point = error_exponent(a.rho, a.i, a.d, a.p)?;
    let args = format!("rho={}; i={}; d={}; p={}", a.rho, a.i, a.d, a.p);
    let mut rows = vec![
        BoundReport {
            name: "error_exponent".into(),
            value: point.value,
            unit: pgt_core::Unit::Nats,
            assumptions: vec![args.clone()],
        },
        BoundReport {
            name: "mutual_info_t1".into(),
            value: mutual_info_t1(a.i, a.d, a.p)?,
            unit: pgt_core::Unit::Nats,
            assumptions: vec![format!("i={}; d={}; p={}", a.i, a.d, a.p)],
        },
    ];
    if let (Some(m), Some(n)) = (a.m, a.n) {
        rows.push(BoundReport {
            name: "ml_error_bound".into(),
            value: ml_error_bound(m, a.rho, a.i, a.d, n, a.p)?,
            unit: pgt_core::Unit::Probability,
            assumptions: vec![format!("{args}; m={m}; n={n}")],
        });
    }
    write_bound_rows(&rows)
}

fn check_disjunct(a: CheckArgs) -> CliResult {
    let matrix = read_matrix(&a.matrix)?;
    let verdict = match a.v {
        Some(v) => is_error_tolerant_disjunct(&matrix, a.delta, v)?,
        None => is_disjunct(&matrix, a.delta)?,
    };
    println!("{verdict}");
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::Domain(format!("{}: {e}", a.config.display())))?;
    let configs: Vec<ExperimentConfig> = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    match a.out {
        Some(path) => {
            harness::sweep(&configs, &path)?;
        }
        None => {
            let reports = harness::run_sweep(&configs)?;
            harness::write_csv(&reports, io::stdout().lock())?;
        }
    }
    Ok(())
}

fn design(a: DesignArgs) -> CliResult {
    let need_seed = || a.seed.ok_or_else(|| Failure::Usage("--seed is required".into()));
    let n = a.n as usize;
    let matrix: TestMatrix = match a.method {
        DesignMethod::Bernoulli => {
            let m = a.m.ok_or_else(|| Failure::Usage("bernoulli needs --m".into()))?;
            let p = a.p.ok_or_else(|| Failure::Usage("bernoulli needs --p".into()))?;
            bernoulli_matrix(m as usize, n, p, need_seed()?)?
        }
        DesignMethod::Chengdu => {
            let delta = a.delta.ok_or_else(|| Failure::Usage("chengdu needs --delta".into()))?;
            let p = a.p.ok_or_else(|| Failure::Usage("chengdu needs --p".into()))?;
            chengdu_matrix(delta, n, p, need_seed()?)?
        }
        DesignMethod::Identity => identity_matrix(n)?,
    };
    let bytes = if a.binary {
        matrix.to_binary()
    } else {
        matrix.to_text().into_bytes()
    };
    match a.out {
        Some(path) => std::fs::write(&path, bytes)
            .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}
