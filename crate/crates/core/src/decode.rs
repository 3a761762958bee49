//! Decoders for noiseless and noisy OR syndromes.

use serde::{Deserialize, Serialize};

use crate::bits::{count_and_not, is_subset};
use crate::channel::Syndrome;
use crate::design::TestMatrix;
use crate::error::{Error, Result};
use crate::numeric::choose_u128;

/// Subsets the ML decoder may enumerate before refusing.
pub const DEFAULT_ML_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Unique,
    /// Several inclusion-minimal sets explain the syndrome equally well.
    Ambiguous,
    NoConsistentSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeResult {
    /// Sorted column indices.
    pub recovered: Vec<usize>,
    pub status: DecodeStatus,
}

impl DecodeResult {
    fn unique(recovered: Vec<usize>) -> Self {
        Self {
            recovered,
            status: DecodeStatus::Unique,
        }
    }
}

fn check_dims(matrix: &TestMatrix, y: &Syndrome) -> Result<()> {
    if y.len() != matrix.rows() {
        return Err(Error::invalid(format!(
            "syndrome length {} does not match {} tests",
            y.len(),
            matrix.rows()
        )));
    }
    Ok(())
}

/// Columns with at most `v` ones outside the syndrome support.
///
/// An all-zero column is never declared defective against an all-zero
/// syndrome: nothing can tell it apart from the empty set there.
fn threshold_scan(matrix: &TestMatrix, y: &Syndrome, v: u32) -> Vec<usize> {
    let y_words = y.bits.words();
    let y_zero = y.bits.is_zero();
    (0..matrix.cols())
        .filter(|&j| {
            let col = matrix.column_words(j);
            count_and_not(col, y_words) <= v && !(y_zero && matrix.is_zero_column(j))
        })
        .collect()
}

/// `{ i : supp(x_i) ⊆ supp(y) }`.
pub fn decode_support(matrix: &TestMatrix, y: &Syndrome) -> Result<DecodeResult> {
    check_dims(matrix, y)?;
    Ok(DecodeResult::unique(threshold_scan(matrix, y, 0)))
}

/// `{ i : N_i ≤ v }` where `N_i` counts rows with `x_i = 1` and `y = 0`.
pub fn decode_threshold(matrix: &TestMatrix, y: &Syndrome, v: usize) -> Result<DecodeResult> {
    check_dims(matrix, y)?;
    let v = u32::try_from(v).unwrap_or(u32::MAX);
    Ok(DecodeResult::unique(threshold_scan(matrix, y, v)))
}

pub fn decode_ml(matrix: &TestMatrix, y: &Syndrome, d_max: usize) -> Result<DecodeResult> {
    decode_ml_with_budget(matrix, y, d_max, DEFAULT_ML_BUDGET)
}

/// Noiseless maximum likelihood: the likelihood of a candidate set is 1 if
/// its columns OR to `y` and 0 otherwise.
///
/// Sets of size `≤ d_max` are searched by increasing size. Among consistent
/// sets only inclusion-minimal ones count; one such set is `Unique`, two or
/// more are `Ambiguous` (the first found is reported), none is
/// `NoConsistentSet` with an empty result.
pub fn decode_ml_with_budget(
    matrix: &TestMatrix,
    y: &Syndrome,
    d_max: usize,
    budget: u128,
) -> Result<DecodeResult> {
    check_dims(matrix, y)?;
    let n = matrix.cols();
    if d_max > n {
        return Err(Error::invalid(format!("d_max {d_max} exceeds n = {n}")));
    }
    let required = (0..=d_max as u64).fold(0u128, |acc, d| {
        acc.saturating_add(choose_u128(n as u64, d))
    });
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: "ML subset enumeration",
            required,
            budget,
        });
    }

    // A consistent set can only use columns inside the syndrome support.
    let y_words = y.bits.words();
    let candidates: Vec<usize> = (0..n)
        .filter(|&j| is_subset(matrix.column_words(j), y_words))
        .collect();

    let mut search = MlSearch {
        matrix,
        y: y_words,
        candidates: &candidates,
        chosen: Vec::with_capacity(d_max),
        unions: vec![vec![0; y_words.len()]; d_max + 1],
        minimal: Vec::new(),
    };
    for size in 0..=d_max.min(candidates.len()) {
        search.enumerate(0, size);
        if search.minimal.len() >= 2 {
            break;
        }
    }

    let mut minimal = search.minimal;
    Ok(match minimal.len() {
        0 => DecodeResult {
            recovered: Vec::new(),
            status: DecodeStatus::NoConsistentSet,
        },
        1 => DecodeResult::unique(minimal.pop().unwrap()),
        _ => DecodeResult {
            recovered: minimal.swap_remove(0),
            status: DecodeStatus::Ambiguous,
        },
    })
}

struct MlSearch<'a> {
    matrix: &'a TestMatrix,
    y: &'a [u64],
    candidates: &'a [usize],
    chosen: Vec<usize>,
    unions: Vec<Vec<u64>>,
    minimal: Vec<Vec<usize>>,
}

impl MlSearch<'_> {
    /// Visits every `remaining`-extension of `chosen` drawn from `candidates[start..]`.
    fn enumerate(&mut self, start: usize, remaining: usize) {
        if self.minimal.len() >= 2 {
            return;
        }
        let level = self.chosen.len();
        if remaining == 0 {
            if self.unions[level] == self.y && !self.contains_minimal() {
                self.minimal.push(self.chosen.clone());
            }
            return;
        }
        let limit = self.candidates.len() + 1 - remaining;
        for idx in start..limit {
            let j = self.candidates[idx];
            let (lower, upper) = self.unions.split_at_mut(level + 1);
            for ((dst, a), b) in upper[0].iter_mut().zip(&lower[level]).zip(self.matrix.column_words(j)) {
                *dst = a | b;
            }
            self.chosen.push(j);
            self.enumerate(idx + 1, remaining - 1);
            self.chosen.pop();
            if self.minimal.len() >= 2 {
                return;
            }
        }
    }

    fn contains_minimal(&self) -> bool {
        self.minimal
            .iter()
            .any(|m| m.iter().all(|j| self.chosen.binary_search(j).is_ok()))
    }
}
