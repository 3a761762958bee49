//! Matrix files.
//!
//! Text: a header line `m n method seed`, then `m` lines of `n` characters
//! `'0'`/`'1'`.
//!
//! Binary: magic `PGTM`, `u32` format version (1), `u64` m, `u64` n,
//! `u64` seed, `u32` byte length of the method name and the name itself,
//! then `m` rows of `⌈n/64⌉` 64-bit words. Bit `j % 64` of word `j / 64`
//! holds column `j`. All integers little-endian.

use std::fs;
use std::path::Path;

use super::matrix::{MatrixMeta, Method, TestMatrix};
use crate::bits::{words_for, WORD_BITS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PGTM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFileFormat {
    Text,
    Binary,
}

impl TestMatrix {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.rows(),
            self.cols(),
            self.meta().method,
            self.meta().seed
        );
        for i in 0..self.rows() {
            out.extend((0..self.cols()).map(|j| if self.get(i, j) { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty matrix file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [m, n, method, seed] = fields[..] else {
            return Err(Error::Format(format!("header must be `m n method seed`, got {header:?}")));
        };
        let m: usize = parse_field(m, "m")?;
        let n: usize = parse_field(n, "n")?;
        let seed: u64 = parse_field(seed, "seed")?;
        let method: Method = method.parse()?;

        let rows: Vec<&[u8]> = lines.map(|l| l.trim().as_bytes()).collect();
        if rows.len() != m {
            return Err(Error::Format(format!("header declares {m} rows, found {}", rows.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n || r.iter().any(|c| *c != b'0' && *c != b'1') {
                return Err(Error::Format(format!("row {i} is not {n} characters of 0/1")));
            }
        }
        let meta = MatrixMeta {
            method,
            p: None,
            delta: None,
            seed,
            has_zero_column: false,
        };
        TestMatrix::from_fn(m, n, meta, |i, j| rows[i][j] == b'1')
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let method = self.meta().method.as_str().as_bytes();
        let mut out = Vec::with_capacity(36 + method.len() + self.raw_rows().len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols() as u64).to_le_bytes());
        out.extend_from_slice(&self.meta().seed.to_le_bytes());
        out.extend_from_slice(&(method.len() as u32).to_le_bytes());
        out.extend_from_slice(method);
        for w in self.raw_rows() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("missing PGTM magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported binary version {version}")));
        }
        let m = usize::try_from(r.u64()?).map_err(|_| Error::Format("m overflows".into()))?;
        let n = usize::try_from(r.u64()?).map_err(|_| Error::Format("n overflows".into()))?;
        let seed = r.u64()?;
        let name_len = r.u32()? as usize;
        let method: Method = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Format("method name is not UTF-8".into()))?
            .parse()?;
        let row_words = words_for(n);
        let expected = m
            .checked_mul(row_words)
            .and_then(|w| w.checked_mul(8))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        if bytes.len() - r.pos != expected {
            return Err(Error::Format(format!(
                "expected {expected} payload bytes for {m}x{n}, found {}",
                bytes.len() - r.pos
            )));
        }
        let words: Vec<u64> = (0..m * row_words).map(|_| r.u64()).collect::<Result<_>>()?;
        let meta = MatrixMeta {
            method,
            p: None,
            delta: None,
            seed,
            has_zero_column: false,
        };
        TestMatrix::from_fn(m, n, meta, |i, j| {
            words[i * row_words + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
        })
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("header field {name} is not a valid integer: {s:?}")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated binary matrix".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reads either format, recognizing binary files by their magic bytes.
pub fn read_matrix(path: &Path) -> Result<TestMatrix> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    if bytes.starts_with(MAGIC) {
        TestMatrix::from_binary(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Format(format!("{} is neither binary nor UTF-8 text", path.display())))?;
        TestMatrix::from_text(text)
    }
}

pub fn write_matrix_text(matrix: &TestMatrix, path: &Path) -> Result<()> {
    fs::write(path, matrix.to_text()).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_matrix_binary(matrix: &TestMatrix, path: &Path) -> Result<()> {
    fs::write(path, matrix.to_binary()).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
