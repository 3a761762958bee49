//! Small numerical helpers shared by the distribution and bound evaluators.
//!
//! Every logarithm here is natural unless the name says otherwise.

use statrs::function::gamma::ln_gamma;

pub const LN_2: f64 = std::f64::consts::LN_2;

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// `ln C(n, k)`, or `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn log2_choose(n: u64, k: u64) -> f64 {
    ln_choose(n, k) / LN_2
}

/// Exact `C(n, k)` saturating at `u128::MAX`.
pub fn choose_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc * (n - j) / (j + 1) is always an integer at this point.
        let num = (n - j) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (j as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Numerically stable `ln Σ exp(x_i)`; returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Binary entropy in nats, with `h(0) = h(1) = 0`.
pub fn binary_entropy_nats(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.ln() - (1.0 - x) * (-x).ln_1p()
}

/// Pairwise summation; keeps the reduction order fixed regardless of length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
