use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::{words_for, BitVec, WORD_BITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bernoulli,
    ChengDu,
    Identity,
    Custom,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bernoulli => "bernoulli",
            Method::ChengDu => "chengdu",
            Method::Identity => "identity",
            Method::Custom => "custom",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Method::Bernoulli),
            "chengdu" => Ok(Method::ChengDu),
            "identity" => Ok(Method::Identity),
            "custom" => Ok(Method::Custom),
            other => Err(Error::Format(format!("unknown construction method {other:?}"))),
        }
    }
}

/// How a matrix was built. `seed` plus the construction call reproduces it bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub method: Method,
    pub p: Option<f64>,
    pub delta: Option<u64>,
    pub seed: u64,
    /// Set when some column is all zero; such a subject is never tested.
    pub has_zero_column: bool,
}

impl MatrixMeta {
    pub fn custom() -> Self {
        Self {
            method: Method::Custom,
            p: None,
            delta: None,
            seed: 0,
            has_zero_column: false,
        }
    }
}

/// Binary `m × n` pooling design: rows are tests, columns are subjects.
///
/// Bits are stored twice, row-major and column-major, both packed into
/// 64-bit words. Decoders work on the column-major copy.
#[derive(Clone, PartialEq)]
pub struct TestMatrix {
    m: usize,
    n: usize,
    row_words: usize,
    col_words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
    meta: MatrixMeta,
}

impl TestMatrix {
    /// Builds a matrix from an entry predicate, called in row-major order.
    pub fn from_fn(
        m: usize,
        n: usize,
        mut meta: MatrixMeta,
        mut entry: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("matrix dimensions must be positive, got {m}x{n}")));
        }
        let row_words = words_for(n);
        let col_words = words_for(m);
        let mut rows = vec![0u64; m * row_words];
        let mut cols = vec![0u64; n * col_words];
        for i in 0..m {
            for j in 0..n {
                if entry(i, j) {
                    rows[i * row_words + j / WORD_BITS] |= 1 << (j % WORD_BITS);
                    cols[j * col_words + i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
            }
        }
        let has_zero_column = cols.chunks(col_words).any(|c| c.iter().all(|&w| w == 0));
        meta.has_zero_column = has_zero_column;
        Ok(Self {
            m,
            n,
            row_words,
            col_words,
            rows,
            cols,
            meta,
        })
    }

    pub fn from_rows(rows: &[BitVec], meta: MatrixMeta) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, BitVec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Format(format!(
                "ragged matrix: row of length {} in a matrix of width {n}",
                bad.len()
            )));
        }
        Self::from_fn(m, n, meta, |i, j| rows[i].get(j))
    }

    /// Parses rows written as `'0'`/`'1'` strings, e.g. `["101", "010"]`.
    pub fn from_row_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| {
                BitVec::parse(r.as_ref())
                    .ok_or_else(|| Error::Format(format!("bad row {:?}", r.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&parsed, MatrixMeta::custom())
    }

    /// Builds a matrix from column bitmasks (bit `i` of `columns[j]` is entry `(i, j)`); `m ≤ 64`.
    pub fn from_column_masks(m: usize, columns: &[u64]) -> Result<Self> {
        if m > WORD_BITS {
            return Err(Error::invalid("column masks support at most 64 rows"));
        }
        Self::from_fn(m, columns.len(), MatrixMeta::custom(), |i, j| {
            columns[j] >> i & 1 == 1
        })
    }

    /// Stacks matrices of equal width on top of each other.
    pub fn vstack(parts: &[&TestMatrix]) -> Result<Self> {
        let n = parts.first().map_or(0, |p| p.n);
        if parts.iter().any(|p| p.n != n) {
            return Err(Error::invalid("vstack requires equal column counts"));
        }
        let offsets: Vec<usize> = parts
            .iter()
            .scan(0, |acc, p| {
                let start = *acc;
                *acc += p.m;
                Some(start)
            })
            .collect();
        let m = offsets.last().map_or(0, |o| o + parts.last().unwrap().m);
        Self::from_fn(m, n, MatrixMeta::custom(), |i, j| {
            let k = offsets.partition_point(|&o| o <= i) - 1;
            parts[k].get(i - offsets[k], j)
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.m && j < self.n, "entry ({i}, {j}) outside {}x{}", self.m, self.n);
        self.rows[i * self.row_words + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    /// Packed bits of row `i` (bit `j` is subject `j`).
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.rows[i * self.row_words..(i + 1) * self.row_words]
    }

    /// Packed bits of column `j` (bit `i` is test `i`).
    pub fn column_words(&self, j: usize) -> &[u64] {
        &self.cols[j * self.col_words..(j + 1) * self.col_words]
    }

    pub fn column(&self, j: usize) -> BitVec {
        BitVec::from_words(self.column_words(j).to_vec(), self.m)
    }

    pub fn column_weight(&self, j: usize) -> usize {
        self.column_words(j).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero_column(&self, j: usize) -> bool {
        self.column_words(j).iter().all(|&w| w == 0)
    }

    pub fn has_zero_column(&self) -> bool {
        self.meta.has_zero_column
    }

    pub fn density(&self) -> f64 {
        let ones: u64 = self.rows.iter().map(|w| w.count_ones() as u64).sum();
        ones as f64 / (self.m * self.n) as f64
    }

    pub(crate) fn column_word_count(&self) -> usize {
        self.col_words
    }

    pub(crate) fn raw_rows(&self) -> &[u64] {
        &self.rows
    }
}

impl fmt::Debug for TestMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TestMatrix {}x{} {:?}", self.m, self.n, self.meta)?;
        for i in 0..self.m {
            let row: String = (0..self.n)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}
