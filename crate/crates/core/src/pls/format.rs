//! `FPLM` model container.
//!
//! ```text
//! "FPLM" | version u8 | flags u8 | zero-variance policy u8
//! a_max u64 | components u64
//! W, P, Q, R               (FPLS matrices)
//! B_1 .. B_a_max           (FPLS matrices)
//! stats_x, stats_y         (mean, std, sum, sum_sq as 1×n FPLS matrices,
//!                           weight_total f64, nonzero count u64)
//! notes: u32 count, then u32 length + UTF-8 each
//! pipeline: u32 length + UTF-8
//! ```
//!
//! All integers and floats little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{PreprocessSpec, ZeroVariancePolicy};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::stats::ColumnStats;

use super::PlsModel;

pub const MODEL_MAGIC: &[u8; 4] = b"FPLM";
pub const MODEL_FORMAT_VERSION: u8 = 1;

fn bad(message: impl Into<String>) -> Error {
    Error::Format {
        what: "model",
        message: message.into(),
    }
}

fn put<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes).map_err(|e| Error::io("<model>", e))
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put(w, &(s.len() as u32).to_le_bytes())?;
    put(w, s.as_bytes())
}

fn take<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|_| bad("truncated"))?;
    Ok(buf)
}

fn take_str<R: Read>(r: &mut R) -> Result<String> {
    let len = u32::from_le_bytes(take(r)?) as usize;
    if len > 1 << 20 {
        return Err(bad("string field too long"));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|_| bad("truncated string"))?;
    String::from_utf8(buf).map_err(|_| bad("string field is not UTF-8"))
}

fn row_matrix(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_parts(1, v.len(), v.to_vec())
}

fn write_stats<W: Write>(w: &mut W, s: &ColumnStats) -> Result<()> {
    for v in [&s.mean, &s.std, &s.sum, &s.sum_sq] {
        row_matrix(v).write_binary(w)?;
    }
    put(w, &s.weight_total.to_le_bytes())?;
    put(w, &(s.nonzero_weight_count as u64).to_le_bytes())
}

fn read_stats<R: Read>(r: &mut R, len: usize) -> Result<ColumnStats> {
    let mut parts = Vec::with_capacity(4);
    for _ in 0..4 {
        let m = DenseMatrix::read_binary(r)?;
        if m.shape() != (1, len) {
            return Err(bad("statistics vector has the wrong length"));
        }
        parts.push(m.into_vec());
    }
    let weight_total = f64::from_le_bytes(take(r)?);
    let nonzero = u64::from_le_bytes(take(r)?) as usize;
    let sum_sq = parts.pop().unwrap();
    let sum = parts.pop().unwrap();
    let std = parts.pop().unwrap();
    let mean = parts.pop().unwrap();
    Ok(ColumnStats {
        mean,
        std,
        sum,
        sum_sq,
        weight_total,
        nonzero_weight_count: nonzero,
    })
}

impl PlsModel {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        put(w, MODEL_MAGIC)?;
        put(w, &[MODEL_FORMAT_VERSION, self.spec.bits(), self.spec.unit_for_zero() as u8])?;
        put(w, &(self.a_max as u64).to_le_bytes())?;
        put(w, &(self.components as u64).to_le_bytes())?;
        for m in [&self.w, &self.p, &self.q, &self.r] {
            m.write_binary(w)?;
        }
        for b in &self.b_stack {
            b.write_binary(w)?;
        }
        write_stats(w, &self.stats_x)?;
        write_stats(w, &self.stats_y)?;
        put(w, &(self.notes.len() as u32).to_le_bytes())?;
        for n in &self.notes {
            put_str(w, n)?;
        }
        put_str(w, &self.pipeline)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        if &take::<_, 4>(r)? != MODEL_MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let [version, bits, policy] = take::<_, 3>(r)?;
        if version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("unsupported model version {version}")));
        }
        if bits > 15 || policy > 1 {
            return Err(bad("invalid flag byte"));
        }
        let spec = PreprocessSpec::from_bits(bits).with_zero_variance(if policy == 1 {
            ZeroVariancePolicy::Unit
        } else {
            ZeroVariancePolicy::Error
        });
        let a_max = u64::from_le_bytes(take(r)?) as usize;
        let components = u64::from_le_bytes(take(r)?) as usize;
        if a_max == 0 || components > a_max || a_max > 1 << 20 {
            return Err(bad("invalid component counts"));
        }
        let w = DenseMatrix::read_binary(r)?;
        let p = DenseMatrix::read_binary(r)?;
        let q = DenseMatrix::read_binary(r)?;
        let rot = DenseMatrix::read_binary(r)?;
        let (k, m) = (w.rows(), q.rows());
        if w.cols() != a_max || p.shape() != (k, a_max) || rot.shape() != (k, a_max) || q.cols() != a_max {
            return Err(bad("loading matrices have inconsistent shapes"));
        }
        let mut b_stack = Vec::with_capacity(a_max);
        for _ in 0..a_max {
            let b = DenseMatrix::read_binary(r)?;
            if b.shape() != (k, m) {
                return Err(bad("regression matrix has the wrong shape"));
            }
            b_stack.push(b);
        }
        let stats_x = read_stats(r, k)?;
        let stats_y = read_stats(r, m)?;
        let n_notes = u32::from_le_bytes(take(r)?) as usize;
        if n_notes > 1 << 16 {
            return Err(bad("too many notes"));
        }
        let notes = (0..n_notes).map(|_| take_str(r)).collect::<Result<Vec<_>>>()?;
        let pipeline = take_str(r)?;
        Ok(PlsModel {
            a_max,
            components,
            w,
            p,
            q,
            r: rot,
            b_stack,
            stats_x,
            stats_y,
            spec,
            notes,
            pipeline,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::pls::fit_ikpls1;

    #[test]
    fn model_round_trip_is_bit_exact() {
        let x = DenseMatrix::from_fn(12, 4, |i, j| ((i * 5 + j * 7) % 9) as f64 * 0.3 - 1.0);
        let y = DenseMatrix::from_fn(12, 2, |i, j| x.get(i, j) * 2.0 + x.get(i, 3) - 0.1 * i as f64);
        let d = Dataset::new(x, y, None).unwrap();
        let spec: PreprocessSpec = "cx,sx,cy".parse().unwrap();
        let m = fit_ikpls1(&d, &spec, 3).unwrap().with_pipeline("snv");
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"FPLM");
        assert_eq!(bytes[4], 1);
        let back = PlsModel::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
        assert!(PlsModel::read_from(&mut &bytes[..bytes.len() - 3]).is_err());
    }
}
