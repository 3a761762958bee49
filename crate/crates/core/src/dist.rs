//! Right-truncated Poisson law for the number of defectives.
//!
//! All arithmetic is done on log-terms `ln(λ^d e^{-λ} / d!)` so that large
//! `λ` and `d` never overflow; the normalizer `c(n) = e^λ / Σ_{d≤n} λ^d/d!`
//! is kept as `ln c(n)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, log_sum_exp};

/// Terms this far (in nats) below the running maximum are dropped from sums.
const NEGLIGIBLE_LOG: f64 = 800.0;

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_K: u32 = 2;

/// `ln(λ^d e^{-λ} / d!)`, the untruncated Poisson log-mass.
fn poisson_log_term(lambda: f64, d: u64) -> f64 {
    d as f64 * lambda.ln() - lambda - ln_factorial(d)
}

/// Sums `exp(f(d))` over `d = start, start+1, …, end` in log space, stopping
/// once past the mode and the terms are negligible. Returns the log of the sum.
fn log_tail_sum(lambda: f64, start: u64, end: u64, f: impl Fn(u64) -> f64) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    let mut d = start;
    while d <= end {
        let t = f(d);
        if t > acc {
            acc = if acc == f64::NEG_INFINITY {
                t
            } else {
                t + (acc - t).exp().ln_1p()
            };
        } else if t > f64::NEG_INFINITY {
            acc += (t - acc).exp().ln_1p();
        }
        if d as f64 > lambda + 1.0 && t < acc - 40.0 {
            break;
        }
        d += 1;
    }
    acc
}

/// Right-truncated Poisson distribution on `{0, …, n}`.
#[derive(Debug, Clone)]
pub struct TruncatedPoisson {
    lambda: f64,
    n: u64,
    ln_normalizer: f64,
    /// Cumulative masses for `d = 0..cdf.len()`; mass past the table is below `e^-800`.
    cdf: Vec<f64>,
}

impl TruncatedPoisson {
    pub fn new(lambda: f64, n: u64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive and finite, got {lambda}")));
        }
        if n == 0 {
            return Err(Error::invalid("population size n must be at least 1"));
        }

        let mut log_terms = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        for d in 0..=n {
            let t = poisson_log_term(lambda, d);
            peak = peak.max(t);
            log_terms.push(t);
            if d as f64 > lambda && t < peak - NEGLIGIBLE_LOG {
                break;
            }
        }
        let ln_normalizer = -log_sum_exp(&log_terms);

        let mut cdf = Vec::with_capacity(log_terms.len());
        let mut acc = 0.0;
        for t in &log_terms {
            acc += (t + ln_normalizer).exp();
            cdf.push(acc);
        }

        Ok(Self {
            lambda,
            n,
            ln_normalizer,
            cdf,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `c(n)`; always `≥ 1`.
    pub fn normalizer(&self) -> f64 {
        self.ln_normalizer.exp()
    }

    pub fn ln_normalizer(&self) -> f64 {
        self.ln_normalizer
    }

    /// `true` when `λ ≥ n/2`, where the sparse-regime formulas stop being meaningful.
    pub fn violates_sparsity(&self) -> bool {
        self.lambda >= self.n as f64 / 2.0
    }

    pub fn ln_pmf(&self, d: u64) -> f64 {
        if d > self.n {
            f64::NEG_INFINITY
        } else {
            self.ln_normalizer + poisson_log_term(self.lambda, d)
        }
    }

    pub fn pmf(&self, d: u64) -> f64 {
        self.ln_pmf(d).exp()
    }

    /// Mean `λ(1 − c(n) λ^n e^{-λ} / n!)`.
    pub fn mean(&self) -> f64 {
        self.lambda * (1.0 - self.pmf(self.n))
    }

    /// `P(D > delta)`, summed exactly over the support.
    pub fn tail_exact(&self, delta: u64) -> f64 {
        if delta >= self.n {
            return 0.0;
        }
        log_tail_sum(self.lambda, delta + 1, self.n, |d| self.ln_pmf(d)).exp()
    }

    /// `Σ_{d > delta} d · P(D = d)`.
    pub fn first_moment_tail(&self, delta: u64) -> f64 {
        if delta >= self.n {
            return 0.0;
        }
        log_tail_sum(self.lambda, delta + 1, self.n, |d| {
            (d as f64).ln() + self.ln_pmf(d)
        })
        .exp()
    }

    /// Inverse-CDF draw over the cached cumulative table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cdf.last().expect("table is never empty");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }

    /// Largest `d` covered by the sampling table.
    pub fn table_support_end(&self) -> u64 {
        self.cdf.len() as u64 - 1
    }
}

/// Asymptotic regime for `λ(n)`, selecting the `Δ` rule and bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// `λ(n) → ∞`: `Δ = ⌈λ^{1+ε}⌉ − 1`.
    UnboundedLambda { epsilon: f64 },
    /// Bounded `λ(n)`: `Δ = ⌈β(n) λ⌉ − 1` with `β(n)` the `K`-fold iterated log.
    BoundedLambda { k: u32 },
}

impl Default for Regime {
    fn default() -> Self {
        Regime::UnboundedLambda {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl Regime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regime::UnboundedLambda { epsilon } if !(epsilon.is_finite() && epsilon > 0.0) => {
                Err(Error::invalid(format!("regime epsilon must be positive, got {epsilon}")))
            }
            Regime::BoundedLambda { k } if k < 2 => {
                Err(Error::invalid(format!("regime K must be at least 2, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// Human-readable regime note for reports.
    pub fn describe(&self) -> String {
        match self {
            Regime::UnboundedLambda { epsilon } => format!("lambda unbounded, eps={epsilon}"),
            Regime::BoundedLambda { k } => format!("lambda bounded, K={k}"),
        }
    }

    /// The inflation `h(n)` with `Δ + 1 = ⌈h(n)⌉`: `λ^{1+ε}` or `β(n) λ`.
    pub fn inflated_lambda(&self, lambda: f64, n: u64) -> Result<f64> {
        self.validate()?;
        match *self {
            Regime::UnboundedLambda { epsilon } => Ok(lambda.powf(1.0 + epsilon)),
            Regime::BoundedLambda { k } => Ok(iterated_log(n as f64, k)? * lambda),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::UnboundedLambda { epsilon } => write!(f, "unbounded:{epsilon}"),
            Regime::BoundedLambda { k } => write!(f, "bounded:{k}"),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    /// Parses `unbounded:EPS` or `bounded:K`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("regime must be unbounded:EPS or bounded:K, got {s:?}")))?;
        let regime = match kind {
            "unbounded" => Regime::UnboundedLambda {
                epsilon: value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad epsilon {value:?}")))?,
            },
            "bounded" => Regime::BoundedLambda {
                k: value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad K {value:?}")))?,
            },
            _ => return Err(Error::invalid(format!("unknown regime kind {kind:?}"))),
        };
        regime.validate()?;
        Ok(regime)
    }
}

/// `log^{(K)} x`; fails if any intermediate value is nonpositive.
pub fn iterated_log(x: f64, k: u32) -> Result<f64> {
    let mut v = x;
    for step in 0..k {
        if v <= 0.0 {
            return Err(Error::domain(format!(
                "{k}-fold log of {x} undefined: value {v} before step {}",
                step + 1
            )));
        }
        v = v.ln();
    }
    if v <= 0.0 {
        return Err(Error::domain(format!("{k}-fold log of {x} is {v}, not positive")));
    }
    Ok(v)
}

/// Markov-style cutoff `Δ` so that `P(D > Δ)` vanishes; clamped to `[0, n]`.
pub fn select_delta(model: &TruncatedPoisson, regime: &Regime) -> Result<u64> {
    let h = regime.inflated_lambda(model.lambda(), model.n())?;
    let delta = (h.ceil() - 1.0).max(0.0);
    Ok((delta as u64).min(model.n()))
}

/// `P(X ≥ k)` for an untruncated Poisson(λ).
pub fn poisson_upper_tail(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    log_tail_sum(lambda, k, u64::MAX, |d| poisson_log_term(lambda, d))
        .exp()
        .min(1.0)
}

/// Chernoff bound `exp(−(λ+a) ln((λ+a)/λ) + a)` on `P(X ≥ λ + a)`.
pub fn chernoff_tail_bound(lambda: f64, a: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 || a.is_nan() || a < 0.0 {
        return Err(Error::invalid(format!(
            "chernoff bound needs lambda > 0 and a >= 0, got ({lambda}, {a})"
        )));
    }
    let s = lambda + a;
    Ok((-(s * (a / lambda).ln_1p()) + a).exp())
}

/// Le Cam bound `2 Σ p_i²` on the gap between a Bernoulli sum and Poisson(Σ p_i).
pub fn lecam_gap_bound(probabilities: &[f64]) -> Result<f64> {
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(2.0 * probabilities.iter().map(|p| p * p).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(lambda: f64, n: u64) -> TruncatedPoisson {
        TruncatedPoisson::new(lambda, n).unwrap()
    }

    #[test]
    fn pmf_examples() {
        assert!((model(1.0, 1).pmf(0) - 0.5).abs() < 1e-15);
        assert!((model(2.0, 2).pmf(2) - 0.4).abs() < 1e-15);
        assert_eq!(model(1.0, 1).pmf(2), 0.0);
        assert!((model(1.0, 1).normalizer() - std::f64::consts::E / 2.0).abs() < 1e-14);
    }

    #[test]
    fn mean_examples() {
        assert!((model(1.0, 1).mean() - 0.5).abs() < 1e-15);
        assert!((model(2.0, 2).mean() - 1.2).abs() < 1e-14);
        assert!((model(3.0, 1_000_000).mean() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tail_examples() {
        assert_eq!(model(2.0, 2).tail_exact(2), 0.0);
        assert!((model(2.0, 2).tail_exact(1) - 0.4).abs() < 1e-14);
        assert!((model(1.0, 1).tail_exact(0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn large_lambda_stays_finite() {
        let m = model(1e4, 20_000);
        assert!(m.normalizer().is_finite() && m.normalizer() >= 1.0 - 1e-9);
        assert!((m.mean() - 1e4).abs() < 1e-6);
        let lo = model(1e4, 9_000);
        assert!(lo.normalizer().is_finite());
        assert!(lo.mean() < 9_000.0);
    }

    #[test]
    fn select_delta_examples() {
        let unbounded = Regime::UnboundedLambda { epsilon: 0.1 };
        assert_eq!(select_delta(&model(100.0, 10_000), &unbounded).unwrap(), 158);
        let bounded = Regime::BoundedLambda { k: 2 };
        assert_eq!(select_delta(&model(3.0, 1_000_000), &bounded).unwrap(), 7);
        assert_eq!(select_delta(&model(1.0, 5), &unbounded).unwrap(), 0);
        // Clamp at n.
        assert_eq!(select_delta(&model(100.0, 50), &unbounded).unwrap(), 50);
    }

    #[test]
    fn select_delta_rejects_undefined_beta() {
        let bounded = Regime::BoundedLambda { k: 2 };
        assert!(matches!(
            select_delta(&model(1.0, 1), &bounded),
            Err(Error::Domain(_))
        ));
        // ln ln ln 10 < 0.
        let k3 = Regime::BoundedLambda { k: 3 };
        assert!(select_delta(&model(1.0, 10), &k3).is_err());
    }

    #[test]
    fn regime_parsing() {
        assert_eq!(
            "unbounded:0.1".parse::<Regime>().unwrap(),
            Regime::UnboundedLambda { epsilon: 0.1 }
        );
        assert_eq!("bounded:3".parse::<Regime>().unwrap(), Regime::BoundedLambda { k: 3 });
        assert!("bounded:1".parse::<Regime>().is_err());
        assert!("unbounded:-1".parse::<Regime>().is_err());
        assert!("sideways:2".parse::<Regime>().is_err());
        let r = Regime::BoundedLambda { k: 4 };
        assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
    }

    #[test]
    fn chernoff_examples() {
        let b = chernoff_tail_bound(1.0, 1.0).unwrap();
        assert!((b - std::f64::consts::E / 4.0).abs() < 1e-15);
        let exact = poisson_upper_tail(1.0, 2);
        assert!((exact - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-14);
        assert!(exact <= b);
        assert_eq!(chernoff_tail_bound(7.0, 0.0).unwrap(), 1.0);
        assert!(chernoff_tail_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn lecam_examples() {
        assert_eq!(lecam_gap_bound(&[0.0; 8]).unwrap(), 0.0);
        assert!((lecam_gap_bound(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let p: Vec<f64> = (1..=2_000_000).map(|i| 0.1 / i as f64).collect();
        let v = lecam_gap_bound(&p).unwrap();
        // 0.02 ζ(2) minus a tail of order 0.02 / N.
        assert!((v - 0.032_898_681_336_964_53).abs() < 1e-7);
        assert!(lecam_gap_bound(&[1.5]).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_in_support() {
        let m = model(1.0, 1);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<u64> = (0..200).map(|_| m.sample(&mut a)).collect();
        let ys: Vec<u64> = (0..200).map(|_| m.sample(&mut b)).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|&d| d <= 1));
        assert!(xs.contains(&0) && xs.contains(&1));
    }

    #[test]
    fn sampler_mean_within_three_sigma() {
        let m = model(2.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let samples = 100_000;
        let sum: u64 = (0..samples).map(|_| m.sample(&mut rng)).sum();
        let mean = sum as f64 / samples as f64;
        // Var(D) = E[D²] − 1.2² with E[D²] = 0.4 + 4·0.4 = 2.0.
        let sigma = ((2.0 - 1.44) / samples as f64).sqrt();
        assert!((mean - 1.2).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TruncatedPoisson::new(0.0, 5).is_err());
        assert!(TruncatedPoisson::new(f64::NAN, 5).is_err());
        assert!(TruncatedPoisson::new(1.0, 0).is_err());
        assert!(model(10.0, 10).violates_sparsity());
        assert!(!model(1.0, 100).violates_sparsity());
    }
}
