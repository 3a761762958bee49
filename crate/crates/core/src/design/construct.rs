use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::matrix::{MatrixMeta, Method, TestMatrix};
use crate::dist::{select_delta, Regime, TruncatedPoisson};
use crate::error::{Error, Result};

/// Alphabet size of the nonbinary stage of the Cheng–Du design.
pub const CHENGDU_ALPHABET: usize = 3;

/// Entries i.i.d. Bernoulli(`p`), drawn row-major from a ChaCha8 stream seeded by `seed`.
pub fn bernoulli_matrix(m: usize, n: usize, p: f64, seed: u64) -> Result<TestMatrix> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("Bernoulli rate must lie in (0, 1), got {p}")));
    }
    let coin = Bernoulli::new(p).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meta = MatrixMeta {
        method: Method::Bernoulli,
        p: Some(p),
        delta: None,
        seed,
        has_zero_column: false,
    };
    TestMatrix::from_fn(m, n, meta, |_, _| coin.sample(&mut rng))
}

/// `n × n` identity: every subject tested alone.
pub fn identity_matrix(n: usize) -> Result<TestMatrix> {
    let meta = MatrixMeta {
        method: Method::Identity,
        p: None,
        delta: None,
        seed: 0,
        has_zero_column: false,
    };
    TestMatrix::from_fn(n, n, meta, |i, j| i == j)
}

/// Design parameters of the i.i.d. Bernoulli (disjunct) construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Method1Params {
    pub delta: u64,
    /// Entry rate `1 / (Δ + 1)`.
    pub p: f64,
    pub m: u64,
    /// Test count before the outer ceiling.
    pub m_exact: f64,
    /// Tolerated syndrome errors.
    pub v: u64,
}

/// `e (Δ+1)² ln n`.
pub(crate) fn method1_clean_tests(delta: u64, n: u64) -> f64 {
    let w = (delta + 1) as f64;
    std::f64::consts::E * w * w * (n as f64).ln()
}

/// `2e (Δ+1)² ln n + 4e v (Δ+1)`, the count when up to `v` outcomes may flip.
pub(crate) fn method1_noisy_tests(delta: u64, n: u64, v: u64) -> f64 {
    let w = (delta + 1) as f64;
    2.0 * method1_clean_tests(delta, n) + 4.0 * std::f64::consts::E * v as f64 * w
}

fn method1_tests(delta: u64, n: u64, v: u64) -> f64 {
    if v == 0 {
        method1_clean_tests(delta, n)
    } else {
        method1_noisy_tests(delta, n, v)
    }
}

/// Picks `Δ` for the regime and sizes a Bernoulli design that is `Δ`-disjunct
/// (or `v`-error-tolerant) with high probability.
///
/// `Δ` is raised to 1 when the regime yields 0, since `p = 1` is not a valid design.
pub fn method1_params(model: &TruncatedPoisson, regime: &Regime, v: u64) -> Result<Method1Params> {
    if model.n() < 2 {
        return Err(Error::invalid("method I needs n >= 2"));
    }
    let delta = select_delta(model, regime)?.max(1);
    let m_exact = method1_tests(delta, model.n(), v);
    Ok(Method1Params {
        delta,
        p: 1.0 / (delta + 1) as f64,
        m: m_exact.ceil() as u64,
        m_exact,
        v,
    })
}

/// Number of ternary rows `⌈(Δ / log₂3)(log₂ n + log₂(1/(1−p)))⌉` for success probability `p`.
pub fn chengdu_rows(delta: u64, n: u64, p_success: f64) -> Result<u64> {
    if delta == 0 {
        return Err(Error::invalid("Cheng-Du design needs delta >= 1"));
    }
    if !(p_success > 0.0 && p_success < 1.0) {
        return Err(Error::invalid(format!("success probability must lie in (0, 1), got {p_success}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let t = delta as f64 / 3f64.log2() * ((n as f64).log2() - (1.0 - p_success).log2());
    Ok((t.ceil() as u64).max(1))
}

/// Two-step Cheng–Du style design: a `t × n` matrix over `{0, 1, 2}` with
/// uniform i.i.d. symbols, then each ternary row `r` becomes three indicator
/// rows, row `3r + s` marking the subjects whose symbol is `s`.
///
/// Every column of the result has weight exactly `t`.
pub fn chengdu_matrix(delta: u64, n: usize, p_success: f64, seed: u64) -> Result<TestMatrix> {
    let t = chengdu_rows(delta, n as u64, p_success)?;
    chengdu_matrix_with_rows(t as usize, n, seed, Some(delta))
}

/// Cheng–Du expansion with an explicit ternary row count (test count `3t`).
pub fn chengdu_matrix_with_rows(
    t: usize,
    n: usize,
    seed: u64,
    delta: Option<u64>,
) -> Result<TestMatrix> {
    if t == 0 {
        return Err(Error::invalid("Cheng-Du design needs at least one row"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols: Vec<u8> = (0..t * n)
        .map(|_| rng.random_range(0..CHENGDU_ALPHABET as u8))
        .collect();
    let meta = MatrixMeta {
        method: Method::ChengDu,
        p: None,
        delta,
        seed,
        has_zero_column: false,
    };
    TestMatrix::from_fn(CHENGDU_ALPHABET * t, n, meta, |row, j| {
        let (r, s) = (row / CHENGDU_ALPHABET, row % CHENGDU_ALPHABET);
        symbols[r * n + j] as usize == s
    })
}
