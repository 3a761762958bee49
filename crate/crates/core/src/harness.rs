//! Monte Carlo experiments: sample defective sets, run a design and decoder
//! (or the staged algorithm), and aggregate error rates and test counts.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{adaptive_lower_bound, fano_lower_bound, semiadaptive_upper_bound};
use crate::channel::{inject_errors, syndrome, ErrorMode};
use crate::decode::{decode_support, decode_threshold, DecodeStatus};
use crate::design::{
    bernoulli_matrix, chengdu_matrix_with_rows, chengdu_rows, identity_matrix, method1_params,
    TestMatrix,
};
use crate::dist::{select_delta, Regime, TruncatedPoisson};
use crate::error::{Error, Result};
use crate::semiadaptive::{run_stages, stage_plan, StageTrace};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Largest matrix (in bits) a single trial may allocate.
pub const MAX_TRIAL_MATRIX_BITS: u64 = 1 << 30;

/// `ε` used for the counting lower bound column of reports.
pub const REPORT_FANO_EPSILON: f64 = 0.1;

/// Header of sweep CSV files.
pub const CSV_HEADER: [&str; 13] = [
    "scheme",
    "lambda",
    "n",
    "m",
    "trials",
    "error_rate",
    "ci_lo",
    "ci_hi",
    "mean_tests",
    "fano_lb",
    "adaptive_lb",
    "semiadaptive_ub",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Bernoulli design, support decoder.
    Method1,
    /// Bernoulli design sized for `v` flips, threshold decoder.
    Method1Noisy { v: u64 },
    /// Ternary indicator design, support decoder.
    Method2,
    SemiAdaptive,
    /// One test per subject.
    Individual,
}

impl Scheme {
    pub fn is_nonadaptive(&self) -> bool {
        !matches!(self, Scheme::SemiAdaptive)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Method1 => f.write_str("method1"),
            Scheme::Method1Noisy { v } => write!(f, "method1_noisy:{v}"),
            Scheme::Method2 => f.write_str("method2"),
            Scheme::SemiAdaptive => f.write_str("semiadaptive"),
            Scheme::Individual => f.write_str("individual"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// Accepts the `Display` forms.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "method1" => Ok(Scheme::Method1),
            "method2" => Ok(Scheme::Method2),
            "semiadaptive" => Ok(Scheme::SemiAdaptive),
            "individual" => Ok(Scheme::Individual),
            _ => match s.strip_prefix("method1_noisy:") {
                Some(v) => v
                    .parse()
                    .map(|v| Scheme::Method1Noisy { v })
                    .map_err(|_| Error::invalid(format!("bad flip count in scheme '{s}'"))),
                None => Err(Error::invalid(format!("unknown scheme '{s}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub n: u64,
    pub scheme: Scheme,
    #[serde(default)]
    pub regime: Regime,
    /// Replaces the formula test count when set.
    #[serde(default)]
    pub m_override: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub error_mode: ErrorMode,
    /// Reuse one matrix for every trial instead of drawing a fresh one.
    #[serde(default)]
    pub fixed_matrix: bool,
}

impl ExperimentConfig {
    pub fn new(lambda: f64, n: u64, scheme: Scheme, trials: u64, seed: u64) -> Self {
        Self {
            lambda,
            n,
            scheme,
            regime: Regime::default(),
            m_override: None,
            trials,
            seed,
            error_mode: ErrorMode::default(),
            fixed_matrix: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.m_override == Some(0) {
            return Err(Error::invalid("m_override must be at least 1"));
        }
        self.regime.validate()
    }

    fn model(&self) -> Result<TruncatedPoisson> {
        TruncatedPoisson::new(self.lambda, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    // The limits are exactly 0 and 1 at the extremes; the formula only gets there up to rounding.
    Interval {
        lo: if successes == 0 { 0.0 } else { (center - half).max(0.0) },
        hi: if successes == trials { 1.0 } else { (center + half).min(1.0) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: u64,
    pub d_true: usize,
    pub recovered_ok: bool,
    pub tests_used: usize,
    pub decode_status: DecodeStatus,
    pub flips: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<StageTrace>,
}

/// Reference values from the bound evaluators; `None` where an evaluator's
/// domain excludes the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceBounds {
    pub fano_lb: Option<f64>,
    pub adaptive_lb: Option<f64>,
    pub semiadaptive_ub: Option<f64>,
}

impl ReferenceBounds {
    fn for_model(model: &TruncatedPoisson) -> Self {
        let (lambda, n) = (model.lambda(), model.n());
        Self {
            fano_lb: fano_lower_bound(lambda, n, REPORT_FANO_EPSILON)
                .ok()
                .map(|f| f.finite.value),
            adaptive_lb: adaptive_lower_bound(lambda, n).ok().map(|b| b.value),
            semiadaptive_ub: semiadaptive_upper_bound(model.mean(), n).ok().map(|b| b.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub config: ExperimentConfig,
    /// Tests per trial for nonadaptive schemes.
    pub m: Option<u64>,
    pub errors: u64,
    pub error_rate: f64,
    pub error_ci: Interval,
    pub mean_tests: f64,
    /// Normal-approximation 95% interval for the mean test count.
    pub mean_tests_ci: Interval,
    pub bounds: ReferenceBounds,
}

impl AggregateReport {
    fn from_trials(
        config: &ExperimentConfig,
        model: &TruncatedPoisson,
        m: Option<u64>,
        trials: &[TrialReport],
    ) -> Self {
        let t = trials.len() as f64;
        let errors = trials.iter().filter(|r| !r.recovered_ok).count() as u64;
        let mean_tests = trials.iter().map(|r| r.tests_used as f64).sum::<f64>() / t;
        let var = if trials.len() > 1 {
            trials
                .iter()
                .map(|r| (r.tests_used as f64 - mean_tests).powi(2))
                .sum::<f64>()
                / (t - 1.0)
        } else {
            0.0
        };
        let half = Z_95 * (var / t).sqrt();
        Self {
            config: config.clone(),
            m,
            errors,
            error_rate: errors as f64 / t,
            error_ci: wilson_interval(errors, trials.len() as u64, Z_95),
            mean_tests,
            mean_tests_ci: Interval {
                lo: mean_tests - half,
                hi: mean_tests + half,
            },
            bounds: ReferenceBounds::for_model(model),
        }
    }

    /// One CSV record in [`CSV_HEADER`] order.
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.config.scheme.to_string(),
            self.config.lambda.to_string(),
            self.config.n.to_string(),
            self.m.map(|m| m.to_string()).unwrap_or_default(),
            self.config.trials.to_string(),
            self.error_rate.to_string(),
            self.error_ci.lo.to_string(),
            self.error_ci.hi.to_string(),
            self.mean_tests.to_string(),
            opt(self.bounds.fano_lb),
            opt(self.bounds.adaptive_lb),
            opt(self.bounds.semiadaptive_ub),
            self.config.seed.to_string(),
        ]
    }
}

/// Generator for one trial: the master seed's stream number `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Independent seed for item `index` of a family derived from `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.set_word_pos(1 << 40);
    rng.next_u64()
}

fn sample_defectives<R: Rng + ?Sized>(model: &TruncatedPoisson, rng: &mut R) -> Vec<usize> {
    let d = model.sample(rng) as usize;
    let mut set = index::sample(rng, model.n() as usize, d).into_vec();
    set.sort_unstable();
    set
}

/// How a nonadaptive scheme builds its matrix and decodes.
struct Design {
    m: u64,
    build: Box<dyn Fn(u64) -> Result<TestMatrix> + Send + Sync>,
    flips: u64,
}

fn check_matrix_size(m: u64, n: u64) -> Result<()> {
    let bits = m.saturating_mul(n);
    if bits > MAX_TRIAL_MATRIX_BITS {
        return Err(Error::TooLarge {
            what: "test matrix bits",
            size: bits,
            limit: MAX_TRIAL_MATRIX_BITS,
        });
    }
    Ok(())
}

fn plan_design(config: &ExperimentConfig, model: &TruncatedPoisson) -> Result<Design> {
    let n = config.n as usize;
    let design = match config.scheme {
        Scheme::Method1 | Scheme::Method1Noisy { .. } => {
            let v = match config.scheme {
                Scheme::Method1Noisy { v } => v,
                _ => 0,
            };
            let params = method1_params(model, &config.regime, v)?;
            let m = config.m_override.unwrap_or(params.m);
            let p = params.p;
            Design {
                m,
                build: Box::new(move |seed| bernoulli_matrix(m as usize, n, p, seed)),
                flips: v,
            }
        }
        Scheme::Method2 => {
            let delta = select_delta(model, &config.regime)?.max(1);
            let t = match config.m_override {
                Some(m) => m.div_ceil(3),
                None => chengdu_rows(delta, config.n, 1.0 - 1.0 / (config.n as f64).ln())?,
            };
            Design {
                m: 3 * t,
                build: Box::new(move |seed| chengdu_matrix_with_rows(t as usize, n, seed, Some(delta))),
                flips: 0,
            }
        }
        Scheme::Individual => {
            if config.m_override.is_some_and(|m| m != config.n) {
                return Err(Error::invalid("individual testing always uses m = n"));
            }
            Design {
                m: config.n,
                build: Box::new(move |_| identity_matrix(n)),
                flips: 0,
            }
        }
        Scheme::SemiAdaptive => {
            return Err(Error::invalid("the semi-adaptive scheme is not a matrix design"))
        }
    };
    check_matrix_size(design.m, config.n)?;
    if design.flips > design.m {
        return Err(Error::invalid(format!(
            "cannot flip {} of {} outcomes",
            design.flips, design.m
        )));
    }
    Ok(design)
}

fn nonadaptive_trial(
    config: &ExperimentConfig,
    model: &TruncatedPoisson,
    design: &Design,
    shared: Option<&TestMatrix>,
    trial: u64,
) -> Result<TrialReport> {
    let mut rng = trial_rng(config.seed, trial);
    let matrix_seed = rng.next_u64();
    let fresh;
    let matrix = match shared {
        Some(m) => m,
        None => {
            fresh = (design.build)(matrix_seed)?;
            &fresh
        }
    };
    let defectives = sample_defectives(model, &mut rng);
    let clean = syndrome(matrix, &defectives)?;
    let result = if design.flips > 0 {
        let noisy = inject_errors(&clean, design.flips as usize, config.error_mode, &mut rng)?;
        let r = decode_threshold(matrix, &noisy, design.flips as usize)?;
        (r, noisy.flips)
    } else {
        (decode_support(matrix, &clean)?, Vec::new())
    };
    let (decoded, flips) = result;
    Ok(TrialReport {
        trial,
        d_true: defectives.len(),
        recovered_ok: decoded.recovered == defectives,
        tests_used: matrix.rows(),
        decode_status: decoded.status,
        flips,
        stages: None,
    })
}

pub fn run_nonadaptive(config: &ExperimentConfig) -> Result<AggregateReport> {
    run_nonadaptive_traced(config).map(|(report, _)| report)
}

/// Like [`run_nonadaptive`], also returning every trial in order.
pub fn run_nonadaptive_traced(config: &ExperimentConfig) -> Result<(AggregateReport, Vec<TrialReport>)> {
    config.validate()?;
    if !config.scheme.is_nonadaptive() {
        return Err(Error::invalid(format!("scheme {} is not nonadaptive", config.scheme)));
    }
    let model = config.model()?;
    let design = plan_design(config, &model)?;
    let shared = if config.fixed_matrix {
        Some((design.build)(derive_seed(config.seed, u64::MAX))?)
    } else {
        None
    };
    let trials: Vec<TrialReport> = (0..config.trials)
        .into_par_iter()
        .map(|t| nonadaptive_trial(config, &model, &design, shared.as_ref(), t))
        .collect::<Result<_>>()?;
    let report = AggregateReport::from_trials(config, &model, Some(design.m), &trials);
    Ok((report, trials))
}

pub fn run_semiadaptive(config: &ExperimentConfig) -> Result<AggregateReport> {
    run_semiadaptive_traced(config).map(|(report, _)| report)
}

/// Like [`run_semiadaptive`], also returning every trial (with its stage trace) in order.
pub fn run_semiadaptive_traced(config: &ExperimentConfig) -> Result<(AggregateReport, Vec<TrialReport>)> {
    config.validate()?;
    if config.scheme != Scheme::SemiAdaptive {
        return Err(Error::invalid(format!("scheme {} is not semi-adaptive", config.scheme)));
    }
    let model = config.model()?;
    let plan = stage_plan(config.n as usize, model.mean())?;
    let trials: Vec<TrialReport> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            let defectives = sample_defectives(&model, &mut rng);
            let trace = run_stages(&plan, &defectives, &mut rng)?;
            Ok(TrialReport {
                trial,
                d_true: defectives.len(),
                recovered_ok: trace.recovered == defectives,
                tests_used: trace.total_tests,
                decode_status: DecodeStatus::Unique,
                flips: Vec::new(),
                stages: Some(trace),
            })
        })
        .collect::<Result<_>>()?;
    let report = AggregateReport::from_trials(config, &model, None, &trials);
    Ok((report, trials))
}

/// Dispatches on the configured scheme.
pub fn run_traced(config: &ExperimentConfig) -> Result<(AggregateReport, Vec<TrialReport>)> {
    if config.scheme.is_nonadaptive() {
        run_nonadaptive_traced(config)
    } else {
        run_semiadaptive_traced(config)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<AggregateReport> {
    run_traced(config).map(|(report, _)| report)
}

/// Runs every configuration, row `i` with seed `derive_seed(configs[i].seed, i)`.
pub fn run_sweep(configs: &[ExperimentConfig]) -> Result<Vec<AggregateReport>> {
    if configs.is_empty() {
        return Err(Error::invalid("sweep needs at least one configuration"));
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = c.clone();
            row.seed = derive_seed(c.seed, i as u64);
            run(&row)
        })
        .collect()
}

pub fn write_csv<W: Write>(reports: &[AggregateReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a sweep and writes its CSV to `path`.
pub fn sweep(configs: &[ExperimentConfig], path: &Path) -> Result<Vec<AggregateReport>> {
    let reports = run_sweep(configs)?;
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(&reports, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(reports)
}

/// One JSON object per line.
pub fn write_trace<W: Write>(trials: &[TrialReport], mut out: W) -> std::io::Result<()> {
    for t in trials {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
