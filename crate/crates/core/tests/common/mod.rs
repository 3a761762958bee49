//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Truncated Poisson probabilities by direct recurrence `t_d = t_{d−1} λ / d`,
/// normalized by their sum. Only for small `λ` and `n`.
pub fn pmf_table(lambda: f64, n: u64) -> Vec<f64> {
    let mut terms = vec![1.0f64];
    for d in 1..=n {
        let prev = *terms.last().unwrap();
        terms.push(prev * lambda / d as f64);
    }
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `E_o` from its defining triple sum over `t₁ ∈ {0,1}^i`, `t₂ ∈ {0,1}^{d−i}`, `y`.
pub fn exponent_by_enumeration(rho: f64, i: u32, d: u32, p: f64) -> f64 {
    let bern = |bits: u32, len: u32| -> f64 {
        let ones = bits.count_ones();
        p.powi(ones as i32) * (1.0 - p).powi((len - ones) as i32)
    };
    let mut outer = 0.0;
    for y in 0..2u32 {
        for t2 in 0..(1u32 << (d - i)) {
            let mut inner = 0.0;
            for t1 in 0..(1u32 << i) {
                let or = u32::from(t1 != 0 || t2 != 0);
                let joint = if or == y { bern(t2, d - i) } else { 0.0 };
                inner += bern(t1, i) * joint.powf(1.0 / (1.0 + rho));
            }
            outer += inner.powf(1.0 + rho);
        }
    }
    -outer.ln()
}
