//! Error-exponent machinery for the maximum-likelihood decoder over an i.i.d.
//! Bernoulli(p) design.
//!
//! For a true set of size `d`, `i` of whose members are swapped out in a
//! competing set, the exponent is
//! `E_o(ρ) = −ln Σ_y Σ_{t₂} (Σ_{t₁} P(t₁) P(y, t₂ | t₁)^{1/(1+ρ)})^{1+ρ}`.
//! Only `t₂ = 0` contributes a nontrivial term, which collapses the sum to
//! `E_o = −ln(1 − q^{d−i} (1 − x^{1+ρ} − (1−x)^{1+ρ}))` with `q = 1−p`, `x = q^i`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{Regime, TruncatedPoisson};
use crate::error::{Error, Result};
use crate::numeric::{binary_entropy_nats, ln_choose, pairwise_sum, LN_2};

/// ρ is searched over `{1, 2, …, RHO_GRID_STEPS} / RHO_GRID_STEPS`.
pub const RHO_GRID_STEPS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub rho: f64,
    pub i: u64,
    pub d: u64,
    pub p: f64,
    /// `E_o` in nats.
    pub value: f64,
}

fn check_exponent_args(rho: f64, i: u64, d: u64, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("rho must lie in [0, 1], got {rho}")));
    }
    if i == 0 || i > d {
        return Err(Error::invalid(format!("need 1 <= i <= d, got i={i}, d={d}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

pub fn error_exponent(rho: f64, i: u64, d: u64, p: f64) -> Result<ExponentPoint> {
    check_exponent_args(rho, i, d, p)?;
    let ln_q = (-p).ln_1p();
    let ln_x = i as f64 * ln_q;
    let x = ln_x.exp();
    let ln_1mx = (-x).ln_1p();
    // 1 − x^{1+ρ} − (1−x)^{1+ρ}, written so that it is exactly 0 at ρ = 0.
    let g = -x * (rho * ln_x).exp_m1() - (1.0 - x) * (rho * ln_1mx).exp_m1();
    let weight = ((d - i) as f64 * ln_q).exp();
    Ok(ExponentPoint {
        rho,
        i,
        d,
        p,
        value: -(-weight * g).ln_1p(),
    })
}

/// `I(T₁; Y | T₂) = (1−p)^{d−i} h_b((1−p)^i)` in nats; the slope of `E_o` at `ρ = 0`.
pub fn mutual_info_t1(i: u64, d: u64, p: f64) -> Result<f64> {
    check_exponent_args(0.0, i, d, p)?;
    let ln_q = (-p).ln_1p();
    Ok(((d - i) as f64 * ln_q).exp() * binary_entropy_nats((i as f64 * ln_q).exp()))
}

/// `ρ (1−p)^d i p (1 − (ρ/2) ln²(ip))`, the small-`ip` estimate from below of `E_o`.
pub fn exponent_lower_estimate(rho: f64, i: u64, d: u64, p: f64) -> Result<f64> {
    check_exponent_args(rho, i, d, p)?;
    let ip = i as f64 * p;
    Ok(rho * (1.0 - p).powi(d as i32) * ip * (1.0 - rho / 2.0 * ip.ln().powi(2)))
}

/// `2^{−m (E_o/ln 2 − ρ log₂(C(n−d, i) C(d, i)) / m)}`, clamped to `[0, 1]`.
pub fn ml_error_bound(m: u64, rho: f64, i: u64, d: u64, n: u64, p: f64) -> Result<f64> {
    let e = error_exponent(rho, i, d, p)?;
    if i + d > n {
        return Err(Error::invalid(format!("need i <= n - d, got i={i}, d={d}, n={n}")));
    }
    let log2_pairs = (ln_choose(n - d, i) + ln_choose(d, i)) / LN_2;
    let exponent = -(m as f64) * e.value / LN_2 + rho * log2_pairs;
    Ok(exponent.exp2().clamp(0.0, 1.0))
}

fn best_ml_error_bound(m: u64, i: u64, d: u64, n: u64, p: f64) -> Result<f64> {
    let mut best = 1.0f64;
    for step in 1..=RHO_GRID_STEPS {
        let rho = f64::from(step) / f64::from(RHO_GRID_STEPS);
        best = best.min(ml_error_bound(m, rho, i, d, n, p)?);
    }
    Ok(best)
}

/// Split of the ML union bound at `d = ⌈h(n)⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlTotalBound {
    /// `Σ_{d ≤ ⌈h⌉} P(D=d) Σ_i min_ρ P(E_i')`.
    pub pe1: f64,
    /// `Σ_{d > ⌈h⌉} d P(D=d)`, bounding each `P(E_i')` by 1.
    pub pe2: f64,
    /// The split point `⌈h(n)⌉`.
    pub cutoff: u64,
}

impl MlTotalBound {
    pub fn total(&self) -> f64 {
        self.pe1 + self.pe2
    }
}

/// Union bound on the ML decoder's error probability with `m` tests of an
/// i.i.d. Bernoulli(p) design, optimizing ρ per `(i, d)` over a grid.
pub fn nonadaptive_ml_total_bound(
    model: &TruncatedPoisson,
    m: u64,
    p: f64,
    regime: &Regime,
) -> Result<MlTotalBound> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let n = model.n();
    let cutoff = (regime.inflated_lambda(model.lambda(), n)?.ceil() as u64).min(n);
    let per_d: Vec<f64> = (1..=cutoff)
        .into_par_iter()
        .map(|d| -> Result<f64> {
            let mut inner = Vec::with_capacity(d as usize);
            for i in 1..=d.min(n - d) {
                inner.push(best_ml_error_bound(m, i, d, n, p)?);
            }
            Ok(model.pmf(d) * pairwise_sum(&inner))
        })
        .collect::<Result<_>>()?;
    Ok(MlTotalBound {
        pe1: pairwise_sum(&per_d),
        pe2: model.first_moment_tail(cutoff),
        cutoff,
    })
}

/// `⌈h⌉^{−(1+γ)}`, the entry rate of the ML design.
pub fn ml_design_p(h: f64, gamma: f64) -> f64 {
    h.ceil().powf(-(1.0 + gamma))
}

/// `2 λ^{1+α} (ln n + τ β(n) ln³ λ)` for growing `λ`.
pub fn ml_tests_growing_lambda(lambda: f64, n: u64, alpha: f64, tau: f64, k: u32) -> Result<f64> {
    let beta = crate::dist::iterated_log(n as f64, k)?;
    Ok(2.0 * lambda.powf(1.0 + alpha) * ((n as f64).ln() + tau * beta * lambda.ln().powi(3)))
}

/// `2 (βλ)^{1+γ} (ln n + τ β² ln²(βλ))` for bounded `λ`.
pub fn ml_tests_bounded_lambda(lambda: f64, n: u64, gamma: f64, tau: f64, k: u32) -> Result<f64> {
    let beta = crate::dist::iterated_log(n as f64, k)?;
    let h = beta * lambda;
    Ok(2.0 * h.powf(1.0 + gamma) * ((n as f64).ln() + tau * beta * beta * h.ln().powi(2)))
}
