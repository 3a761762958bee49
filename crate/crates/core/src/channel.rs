//! Boolean-OR test outcomes and bounded bit-flip noise.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::design::TestMatrix;
use crate::error::{Error, Result};

/// Test outcomes `y ∈ {0,1}^m` plus the rows flipped by noise, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Syndrome {
    pub bits: BitVec,
    /// Sorted, distinct row indices that were corrupted.
    pub flips: Vec<usize>,
}

impl Syndrome {
    pub fn clean(bits: BitVec) -> Self {
        Self {
            bits,
            flips: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Exactly `v` distinct rows flipped.
    #[default]
    ExactlyV,
    /// A uniform count in `[0, v]` of distinct rows flipped.
    UpToV,
}

/// `y(i) = 1` iff some defective column has a 1 in row `i`.
pub fn syndrome(matrix: &TestMatrix, defectives: &[usize]) -> Result<Syndrome> {
    let mut bits = BitVec::zeros(matrix.rows());
    for &j in defectives {
        if j >= matrix.cols() {
            return Err(Error::invalid(format!(
                "defective index {j} outside 0..{}",
                matrix.cols()
            )));
        }
        bits.or_assign(matrix.column_words(j));
    }
    Ok(Syndrome::clean(bits))
}

/// Flips distinct, uniformly chosen rows of `s`.
pub fn inject_errors<R: Rng + ?Sized>(
    s: &Syndrome,
    v: usize,
    mode: ErrorMode,
    rng: &mut R,
) -> Result<Syndrome> {
    let m = s.len();
    if v > m {
        return Err(Error::invalid(format!("cannot flip {v} of {m} rows")));
    }
    let count = match mode {
        ErrorMode::ExactlyV => v,
        ErrorMode::UpToV => rng.random_range(0..=v),
    };
    let mut flips = index::sample(rng, m, count).into_vec();
    flips.sort_unstable();
    let mut bits = s.bits.clone();
    for &i in &flips {
        bits.flip(i);
    }
    Ok(Syndrome { bits, flips })
}
