//! Counting and constructive bounds on the test budget.

use super::{BoundReport, Unit, SPARSITY_WARNING};
use crate::design::construct::method1_noisy_tests;
use crate::design::{method1_params, Method1Params};
use crate::dist::{select_delta, Regime, TruncatedPoisson};
use crate::error::{Error, Result};
use crate::numeric::{ln_choose, log2_choose};

/// The two forms of the counting lower bound for nonadaptive designs.
#[derive(Debug, Clone, PartialEq)]
pub struct FanoBound {
    /// `(1−ε) λ log₂ n`.
    pub asymptotic: BoundReport,
    /// `log₂ C(n, ⌈(1−ε)λ⌉)`.
    pub finite: BoundReport,
}

impl FanoBound {
    pub fn into_reports(self) -> Vec<BoundReport> {
        vec![self.asymptotic, self.finite]
    }
}

pub fn fano_lower_bound(lambda: f64, n: u64, epsilon: f64) -> Result<FanoBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) || n == 0 {
        return Err(Error::domain(format!("need lambda > 0 and n >= 1, got ({lambda}, {n})")));
    }
    let scaled = (1.0 - epsilon) * lambda;
    if scaled > n as f64 / 2.0 {
        return Err(Error::domain(format!(
            "(1-eps) lambda = {scaled} exceeds n/2 = {}",
            n as f64 / 2.0
        )));
    }
    let note = format!("eps={epsilon}");
    Ok(FanoBound {
        asymptotic: BoundReport::new("fano_asymptotic", scaled * (n as f64).log2(), Unit::Tests)
            .note(note.clone()),
        finite: BoundReport::new("fano_finite", log2_choose(n, scaled.ceil() as u64), Unit::Tests)
            .note(note),
    })
}

/// `(3/log₂3)(Δ+1) log₂ n`, the ternary design's test count.
pub fn method2_tests(delta: u64, n: u64) -> f64 {
    3.0 / 3f64.log2() * (delta + 1) as f64 * (n as f64).log2()
}

/// Test counts of the Bernoulli design (noiseless and with `v` flips) and of
/// the ternary design, with `Δ` taken from the regime.
pub fn constructive_upper_bounds(
    model: &TruncatedPoisson,
    regime: &Regime,
    v: u64,
) -> Result<Vec<BoundReport>> {
    if model.n() < 2 {
        return Err(Error::invalid("constructive bounds need n >= 2"));
    }
    let regime_note = regime.describe();
    let with_notes = |r: BoundReport, params: &Method1Params| {
        let r = r
            .note(regime_note.clone())
            .note(format!("delta={}", params.delta))
            .note(format!("p={}", params.p));
        if model.violates_sparsity() {
            r.note(SPARSITY_WARNING)
        } else {
            r
        }
    };

    let clean = method1_params(model, regime, 0)?;
    let noisy = Method1Params {
        m_exact: method1_noisy_tests(clean.delta, model.n(), v),
        v,
        ..clean.clone()
    };
    let noisy = Method1Params {
        m: noisy.m_exact.ceil() as u64,
        ..noisy
    };
    let delta = select_delta(model, regime)?;
    let m2 = method2_tests(delta, model.n()).ceil();

    let mut out = vec![
        with_notes(BoundReport::new("method1", clean.m as f64, Unit::Tests), &clean),
        with_notes(BoundReport::new("method1_noisy", noisy.m as f64, Unit::Tests), &noisy)
            .note(format!("v={v}")),
        BoundReport::new("method2", m2, Unit::Tests)
            .note(regime_note.clone())
            .note(format!("delta={delta}")),
    ];
    if model.violates_sparsity() {
        out[2].assumptions.push(SPARSITY_WARNING.to_string());
    }
    Ok(out)
}

/// `λ log₂(n/λ) − log₂e · λ⁴/n²`, floored at zero.
pub fn adaptive_lower_bound(lambda: f64, n: u64) -> Result<BoundReport> {
    check_sparse_input(lambda, n, "lambda")?;
    let nf = n as f64;
    let raw = lambda * (nf / lambda).log2() - std::f64::consts::LOG2_E * lambda.powi(4) / (nf * nf);
    let mut report = BoundReport::new("adaptive_lb", raw.max(0.0), Unit::Tests);
    if raw < 0.0 {
        report = report.note("correction term exceeds main term; floored at 0");
    }
    Ok(sparsity_note(report, lambda, n))
}

/// `(e / log₂e) λ̄ log₂(n/λ̄)`, the expected cost of the `s`-stage algorithm.
pub fn semiadaptive_upper_bound(lambda_bar: f64, n: u64) -> Result<BoundReport> {
    check_sparse_input(lambda_bar, n, "lambda_bar")?;
    let c = std::f64::consts::E / std::f64::consts::LOG2_E;
    let value = c * lambda_bar * (n as f64 / lambda_bar).log2();
    Ok(sparsity_note(
        BoundReport::new("semiadaptive_ub", value, Unit::Tests),
        lambda_bar,
        n,
    ))
}

/// `(Δ+1) C(n, Δ+1) (1 − p(1−p)^Δ)^m`: union bound on an i.i.d. Bernoulli(p)
/// `m × n` matrix failing to be `Δ`-disjunct. Not clamped.
pub fn nondisjunct_probability_bound(n: u64, delta: u64, p: f64, m: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if delta + 1 > n {
        return Err(Error::invalid(format!("delta + 1 = {} exceeds n = {n}", delta + 1)));
    }
    let good_row = p * (1.0 - p).powi(delta as i32);
    let ln = ((delta + 1) as f64).ln() + ln_choose(n, delta + 1) + m as f64 * (-good_row).ln_1p();
    Ok(ln.exp())
}

fn check_sparse_input(lambda: f64, n: u64, what: &str) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("{what} must be positive, got {lambda}")));
    }
    if lambda >= n as f64 {
        return Err(Error::domain(format!("{what} = {lambda} must be below n = {n}")));
    }
    Ok(())
}

fn sparsity_note(report: BoundReport, lambda: f64, n: u64) -> BoundReport {
    if lambda >= n as f64 / 2.0 {
        report.note(SPARSITY_WARNING)
    } else {
        report
    }
}
