//! Product kernels and a small dense solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Output rows handled per parallel task in the cross-product kernel.
const TILE: usize = 32;

/// Weighted cross products `XᵀΛX` (K×K) and `XᵀΛY` (K×M) over `rows`
/// (all rows when `None`), returned as row-major buffers.
///
/// Every output entry is accumulated over the selected rows in order, so
/// the result does not depend on how the work is split across threads.
pub fn cross_products(
    x: &DenseMatrix,
    y: &DenseMatrix,
    rows: Option<&[usize]>,
    weights: Option<&[f64]>,
) -> (Vec<f64>, Vec<f64>) {
    let (k, m) = (x.cols(), y.cols());
    let width = k + m;
    let out = cross_products_upper(x, y, rows, weights);
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k * m];
    for i in 0..k {
        let src = &out[i * width..(i + 1) * width];
        for j in i..k {
            xtx[i * k + j] = src[j];
            xtx[j * k + i] = src[j];
        }
        xty[i * m..(i + 1) * m].copy_from_slice(&src[k..]);
    }
    (xtx, xty)
}

/// `K × (K+M)` row-major buffer whose row `i` holds `(XᵀΛX)_{i,i..K}` at
/// columns `i..K` and `(XᵀΛY)_{i,·}` at columns `K..`; the strict lower
/// part is left at zero.
pub(crate) fn cross_products_upper(
    x: &DenseMatrix,
    y: &DenseMatrix,
    rows: Option<&[usize]>,
    weights: Option<&[f64]>,
) -> Vec<f64> {
    let k = x.cols();
    let m = y.cols();
    let width = k + m;
    let mut out = vec![0.0; k * width];
    let n_rows = rows.map_or(x.rows(), <[usize]>::len);
    let row_at = |r: usize| rows.map_or(r, |idx| idx[r]);

    out.par_chunks_mut(TILE * width)
        .enumerate()
        .for_each(|(t, tile)| {
            let i0 = t * TILE;
            let i1 = (i0 + TILE).min(k);
            for r in 0..n_rows {
                let ri = row_at(r);
                let w = weights.map_or(1.0, |w| w[ri]);
                if w == 0.0 {
                    continue;
                }
                let xr = x.row(ri);
                let yr = y.row(ri);
                for i in i0..i1 {
                    let c = w * xr[i];
                    if c == 0.0 {
                        continue;
                    }
                    let dst = &mut tile[(i - i0) * width..(i - i0 + 1) * width];
                    for (d, &v) in dst[i..k].iter_mut().zip(&xr[i..]) {
                        *d += c * v;
                    }
                    for (d, &v) in dst[k..].iter_mut().zip(yr) {
                        *d += c * v;
                    }
                }
            }
        });
    out
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `A·v` for a row-major `rows×cols` buffer.
pub(crate) fn matvec(a: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), rows * cols);
    (0..rows).map(|i| dot(&a[i * cols..(i + 1) * cols], v)).collect()
}

/// `Aᵀ·v` for a row-major `rows×cols` buffer.
pub(crate) fn matvec_t(a: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 0..rows {
        let vi = v[i];
        for (o, &aij) in out.iter_mut().zip(&a[i * cols..(i + 1) * cols]) {
            *o += aij * vi;
        }
    }
    out
}

/// Solves `A·X = B` for square `A` (n×n) and `B` (n×m) by Gaussian
/// elimination with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::invalid("solve needs a square matrix"));
    }
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: n,
            found: b.rows(),
        });
    }
    let m = b.cols();
    let mut lu = a.as_slice().to_vec();
    let mut rhs = b.as_slice().to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| lu[p * n + col].abs().total_cmp(&lu[q * n + col].abs()))
            .unwrap();
        if lu[piv * n + col].abs() <= 1e-14 * scale {
            return Err(Error::DegenerateFit(format!(
                "singular system (pivot {col})"
            )));
        }
        if piv != col {
            for j in 0..n {
                lu.swap(col * n + j, piv * n + j);
            }
            for j in 0..m {
                rhs.swap(col * m + j, piv * m + j);
            }
        }
        let d = lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                lu[r * n + j] -= f * lu[col * n + j];
            }
            for j in 0..m {
                rhs[r * m + j] -= f * rhs[col * m + j];
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[col * n + col];
        for j in 0..m {
            let mut s = rhs[col * m + j];
            for c in col + 1..n {
                s -= lu[col * n + c] * rhs[c * m + j];
            }
            rhs[col * m + j] = s / d;
        }
    }
    DenseMatrix::new(n, m, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_products_match_explicit() {
        let x = DenseMatrix::from_fn(23, 19, |i, j| ((i * 31 + j * 17) % 13) as f64 - 6.0);
        let y = DenseMatrix::from_fn(23, 2, |i, j| (i as f64) * 0.5 - j as f64);
        let w: Vec<f64> = (0..23).map(|i| (i % 4) as f64 * 0.5).collect();
        let (xtx, xty) = cross_products(&x, &y, None, Some(&w));
        for a in 0..19 {
            for b in 0..19 {
                let e: f64 = (0..23).map(|i| w[i] * x.get(i, a) * x.get(i, b)).sum();
                assert!((xtx[a * 19 + b] - e).abs() < 1e-9);
            }
            for b in 0..2 {
                let e: f64 = (0..23).map(|i| w[i] * x.get(i, a) * y.get(i, b)).sum();
                assert!((xty[a * 2 + b] - e).abs() < 1e-9);
            }
        }
        let rows = [3usize, 7, 20];
        let (sub, _) = cross_products(&x, &y, Some(&rows), None);
        let e: f64 = rows.iter().map(|&i| x.get(i, 2) * x.get(i, 5)).sum();
        assert_eq!(sub[2 * 19 + 5], e);
    }

    #[test]
    fn solve_small_system() {
        let a = DenseMatrix::from_rows(&[[0.0, 2.0], [1.0, 1.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[4.0], [3.0]]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-15 && (x.get(1, 0) - 2.0).abs() < 1e-15);
        let s = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(solve(&s, &b).is_err());
    }
}
