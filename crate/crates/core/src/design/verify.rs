//! Brute-force disjunctness checks.
//!
//! Both checks ask, for every column `i` and every set `T` of `Δ` other
//! columns, how many rows have a 1 in column `i` and 0 in all of `T`.
//! Adding a column to `T` can only shrink that count, so a partial `T`
//! that already falls below the threshold settles the answer early.

use rayon::prelude::*;

use super::matrix::TestMatrix;
use crate::bits::count_and_not;
use crate::error::{Error, Result};
use crate::numeric::choose_u128;

/// Subset-member checks allowed before a verification request is refused.
pub const DEFAULT_DISJUNCT_BUDGET: u128 = 100_000_000;

/// Work above which columns are checked in parallel.
const PARALLEL_THRESHOLD: u128 = 1 << 16;

pub fn is_disjunct(matrix: &TestMatrix, delta: usize) -> Result<bool> {
    is_disjunct_with_budget(matrix, delta, DEFAULT_DISJUNCT_BUDGET)
}

pub fn is_disjunct_with_budget(matrix: &TestMatrix, delta: usize, budget: u128) -> Result<bool> {
    private_rows_at_least(matrix, delta, 1, budget)
}

/// `Δ`-disjunct with at least `2v + 1` private rows per column against any `Δ` others.
pub fn is_error_tolerant_disjunct(matrix: &TestMatrix, delta: usize, v: usize) -> Result<bool> {
    is_error_tolerant_disjunct_with_budget(matrix, delta, v, DEFAULT_DISJUNCT_BUDGET)
}

pub fn is_error_tolerant_disjunct_with_budget(
    matrix: &TestMatrix,
    delta: usize,
    v: usize,
    budget: u128,
) -> Result<bool> {
    let need = u32::try_from(2 * v + 1).map_err(|_| Error::invalid("v too large"))?;
    private_rows_at_least(matrix, delta, need, budget)
}

fn private_rows_at_least(matrix: &TestMatrix, delta: usize, need: u32, budget: u128) -> Result<bool> {
    let n = matrix.cols();
    if delta + 1 > n {
        return Err(Error::invalid(format!(
            "disjunctness of order {delta} needs at least {} columns, matrix has {n}",
            delta + 1
        )));
    }
    let required = choose_u128(n as u64, delta as u64 + 1).saturating_mul(delta as u128 + 1);
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: "disjunctness check",
            required,
            budget,
        });
    }
    let check = |target: usize| ColumnSearch::new(matrix, target, delta, need).run();
    Ok(if required >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().all(check)
    } else {
        (0..n).all(check)
    })
}

struct ColumnSearch<'a> {
    matrix: &'a TestMatrix,
    target: usize,
    need: u32,
    /// `unions[k]` is the OR of the first `k` chosen columns.
    unions: Vec<Vec<u64>>,
}

impl<'a> ColumnSearch<'a> {
    fn new(matrix: &'a TestMatrix, target: usize, delta: usize, need: u32) -> Self {
        let words = matrix.column_word_count();
        Self {
            matrix,
            target,
            need,
            unions: vec![vec![0; words]; delta + 1],
        }
    }

    fn run(mut self) -> bool {
        let target = self.matrix.column_words(self.target);
        if count_and_not(target, &self.unions[0]) < self.need {
            return false;
        }
        let delta = self.unions.len() - 1;
        self.extend(0, 0, delta)
    }

    /// Tries every way to add `remaining` more columns (indices `≥ start`) to the set at `level`.
    fn extend(&mut self, start: usize, level: usize, remaining: usize) -> bool {
        if remaining == 0 {
            return true;
        }
        let n = self.matrix.cols();
        let target = self.matrix.column_words(self.target);
        for j in start..n {
            if j == self.target {
                continue;
            }
            // Columns after j other than the target must still fill the set.
            let after = n - j - 1 - usize::from(self.target > j);
            if after < remaining - 1 {
                break;
            }
            let (lower, upper) = self.unions.split_at_mut(level + 1);
            let next = &mut upper[0];
            for ((dst, a), b) in next.iter_mut().zip(&lower[level]).zip(self.matrix.column_words(j)) {
                *dst = a | b;
            }
            if count_and_not(target, next) < self.need {
                return false;
            }
            if !self.extend(j + 1, level + 1, remaining - 1) {
                return false;
            }
        }
        true
    }
}
