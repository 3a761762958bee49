//! Entropy of the defective-pattern source and the optimal prefix code over it.
//!
//! A pattern with `d` defectives has probability `P(D = d) / C(n, d)`.

use std::collections::VecDeque;

use super::{BoundReport, Unit};
use crate::dist::TruncatedPoisson;
use crate::error::{Error, Result};
use crate::numeric::{ln_choose, pairwise_sum, LN_2};

/// Largest population for which the code is built explicitly (`2^n` leaves).
pub const MAX_HUFFMAN_N: u64 = 20;

/// `H(w) = Σ_d P(D=d) log₂(C(n,d) / P(D=d))` in bits.
pub fn source_entropy(model: &TruncatedPoisson) -> BoundReport {
    let lambda = model.lambda();
    let mut terms = Vec::new();
    for d in 0..=model.n() {
        let ln_p = model.ln_pmf(d);
        if ln_p < -745.0 {
            if d as f64 > lambda {
                break;
            }
            continue;
        }
        terms.push(ln_p.exp() * (ln_choose(model.n(), d) - ln_p));
    }
    BoundReport::new("source_entropy", pairwise_sum(&terms) / LN_2, Unit::Bits)
}

/// Expected codeword length of a Huffman code over all `2^n` patterns.
///
/// Leaves are sorted by probability (ties by pattern weight), then merged with
/// the two-queue method; the expected length is the total weight of the
/// internal nodes.
pub fn huffman_expected_length(model: &TruncatedPoisson) -> Result<BoundReport> {
    let n = model.n();
    if n > MAX_HUFFMAN_N {
        return Err(Error::TooLarge {
            what: "Huffman alphabet exponent n",
            size: n,
            limit: MAX_HUFFMAN_N,
        });
    }
    let mut groups: Vec<(f64, u64)> = (0..=n)
        .map(|d| ((model.ln_pmf(d) - ln_choose(n, d)).exp(), d))
        .collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut leaves = VecDeque::with_capacity(1 << n);
    for &(p, d) in &groups {
        let count = crate::numeric::choose_u128(n, d) as usize;
        leaves.extend(std::iter::repeat(p).take(count));
    }

    let mut internal: VecDeque<f64> = VecDeque::with_capacity(leaves.len());
    let mut expected = 0.0;
    let pop_min = |leaves: &mut VecDeque<f64>, internal: &mut VecDeque<f64>| -> f64 {
        match (leaves.front(), internal.front()) {
            (Some(&a), Some(&b)) if b < a => internal.pop_front().unwrap(),
            (Some(_), _) => leaves.pop_front().unwrap(),
            _ => internal.pop_front().unwrap(),
        }
    };
    while leaves.len() + internal.len() > 1 {
        let a = pop_min(&mut leaves, &mut internal);
        let b = pop_min(&mut leaves, &mut internal);
        expected += a + b;
        internal.push_back(a + b);
    }
    Ok(BoundReport::new("huffman_expected_length", expected, Unit::Bits))
}
