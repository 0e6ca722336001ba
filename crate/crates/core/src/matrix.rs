//! Row-major dense matrix and its binary interchange format.
//!
//! The binary layout is `"FPLS"`, a format version byte, rows and columns as
//! little-endian `u64`, then the values row by row as little-endian IEEE-754
//! doubles.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"FPLS";
pub const MATRIX_FORMAT_VERSION: u8 = 1;

/// Upper bound on the element count accepted from a binary stream.
const MAX_ELEMENTS: u64 = 1 << 36;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major values, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix element count",
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * k);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::Structural {
                    line: i as u64 + 1,
                    message: format!("row has {} values, expected {k}", r.len()),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, k, values)
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.values[i * cols + j] = f(i, j);
            }
        }
        debug_assert!(m.values.iter().all(|v| v.is_finite()));
        m
    }

    /// Wraps values produced by internal kernels. Shape must be non-empty
    /// and consistent; finiteness is the caller's responsibility.
    pub(crate) fn from_parts(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.values[i * c..(i + 1) * c]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.row_iter().map(|r| r[j]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.values.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        Self::from_parts(self.cols, self.rows, out)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let a = self.row(i);
            let dst = &mut out[i * m..(i + 1) * m];
            for (l, &a_il) in a.iter().enumerate().take(k) {
                if a_il == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(l)) {
                    *d += a_il * b;
                }
            }
        }
        Ok(Self::from_parts(n, m, out))
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::invalid("row selection is empty"));
        }
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(Self::from_parts(idx.len(), self.cols, values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest elementwise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        w.write_all(MATRIX_MAGIC).map_err(io)?;
        w.write_all(&[MATRIX_FORMAT_VERSION]).map_err(io)?;
        w.write_all(&(self.rows as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.cols as u64).to_le_bytes()).map_err(io)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let fmt = |message: &str| Error::Format {
            what: "matrix",
            message: message.to_string(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| fmt("truncated header"))?;
        if &magic != MATRIX_MAGIC {
            return Err(fmt("bad magic bytes"));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version).map_err(|_| fmt("truncated header"))?;
        if version[0] != MATRIX_FORMAT_VERSION {
            return Err(fmt(&format!("unsupported format version {}", version[0])));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(|_| fmt("truncated header"))?;
        let rows = u64::from_le_bytes(word);
        r.read_exact(&mut word).map_err(|_| fmt("truncated header"))?;
        let cols = u64::from_le_bytes(word);
        let count = rows
            .checked_mul(cols)
            .filter(|&c| c <= MAX_ELEMENTS)
            .ok_or_else(|| fmt("dimensions too large"))?;
        let mut values = Vec::with_capacity(count as usize);
        for _ in 0..count {
            r.read_exact(&mut word).map_err(|_| fmt("truncated values"))?;
            values.push(f64::from_le_bytes(word));
        }
        Self::new(rows as usize, cols as usize, values)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_binary(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(&mut BufReader::new(file))
    }

    /// Binary encoding as an owned buffer.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(21 + 8 * self.values.len());
        self.write_binary(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter().take(8) {
            writeln!(f, "  {r:?}")?;
        }
        if self.rows > 8 {
            writeln!(f, "  ... {} more rows", self.rows - 8)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_empty() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_and_transpose() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let ata = a.transpose().matmul(&a).unwrap();
        assert_eq!(ata.as_slice(), &[35.0, 44.0, 44.0, 56.0]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn binary_layout_is_exact() {
        let m = DenseMatrix::from_rows(&[[1.5, -2.0]]).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"FPLS");
        assert_eq!(bytes[4], 1);
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[21..29].try_into().unwrap()), 1.5);
        assert_eq!(bytes.len(), 37);
        let back = DenseMatrix::read_binary(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn binary_rejects_bad_header() {
        let mut bytes = DenseMatrix::zeros(1, 1).to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            DenseMatrix::read_binary(&mut bytes.as_slice()),
            Err(Error::Format { .. })
        ));
        let bytes = DenseMatrix::zeros(2, 2).to_bytes();
        assert!(DenseMatrix::read_binary(&mut &bytes[..30]).is_err());
    }
}
