//! Improved Kernel PLS (Dayal & MacGregor), Algorithms #1 and #2.
//!
//! Both variants share the component loop. Per component:
//!
//! 1. `w ∝ XᵀY` for one response, else `w ∝ (XᵀY)q` with `q` the dominant
//!    eigenvector of the M×M matrix `(XᵀY)ᵀ(XᵀY) = YᵀXXᵀY`;
//! 2. `r = w − Σ_{j<a} (p_jᵀw) r_j`;
//! 3. `tt = tᵀt`, `p = Xᵀt/tt` where Algorithm #1 forms `t = Xr` and
//!    Algorithm #2 uses `tt = rᵀ(XᵀX)r`, `p = (XᵀX)r/tt`;
//! 4. `q = (XᵀY)ᵀr/tt`, then `XᵀY ← XᵀY − p·qᵀ·tt`.
//!
//! Weighted fits use `XᵀΛX` and `XᵀΛY` throughout.

use crate::data::{Dataset, PreprocessSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};
use crate::matrix::DenseMatrix;
use crate::stats::ColumnStats;

use super::{build_b_stack, check_component_count, fix_sign, prepare, PlsModel, EXHAUSTED_TOL};

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;
/// `tt` at or below this fraction of `trace(XᵀX)·‖r‖²` means the score
/// vector vanished.
const TT_TOL: f64 = 1e-15;

trait ScoreSource {
    /// Returns `(tᵀΛt, XᵀΛt / tᵀΛt)` for the score direction `r`.
    fn project(&mut self, r: &[f64], component: usize) -> Result<(f64, Vec<f64>)>;
}

struct FromX<'a> {
    x: &'a DenseMatrix,
    weights: Option<&'a [f64]>,
    trace: f64,
    scores: Vec<Vec<f64>>,
}

impl ScoreSource for FromX<'_> {
    fn project(&mut self, r: &[f64], component: usize) -> Result<(f64, Vec<f64>)> {
        let n = self.x.rows();
        let t = linalg::matvec(self.x.as_slice(), n, self.x.cols(), r);
        let wt: Vec<f64> = match self.weights {
            Some(w) => t.iter().zip(w).map(|(a, b)| a * b).collect(),
            None => t.clone(),
        };
        let tt = dot(&t, &wt);
        if !(tt > TT_TOL * self.trace * dot(r, r)) {
            return Err(Error::DegenerateComponent {
                component: component + 1,
            });
        }
        let mut p = linalg::matvec_t(self.x.as_slice(), n, self.x.cols(), &wt);
        p.iter_mut().for_each(|v| *v /= tt);
        self.scores.push(t);
        Ok((tt, p))
    }
}

struct FromGram<'a> {
    xtx: &'a DenseMatrix,
    trace: f64,
}

impl ScoreSource for FromGram<'_> {
    fn project(&mut self, r: &[f64], component: usize) -> Result<(f64, Vec<f64>)> {
        let k = self.xtx.rows();
        let mut xr = linalg::matvec(self.xtx.as_slice(), k, k, r);
        let tt = dot(r, &xr);
        if !(tt > TT_TOL * self.trace * dot(r, r)) {
            return Err(Error::DegenerateComponent {
                component: component + 1,
            });
        }
        xr.iter_mut().for_each(|v| *v /= tt);
        Ok((tt, xr))
    }
}

/// Dominant eigenvector of a symmetric PSD matrix by power iteration from
/// the all-ones vector. Returns the vector and whether it converged.
pub(crate) fn dominant_eigenvector(s: &[f64], m: usize) -> (Vec<f64>, bool) {
    let mut q = vec![1.0 / (m as f64).sqrt(); m];
    let mut next = linalg::matvec(s, m, m, &q);
    if norm(&next) == 0.0 {
        // all-ones is orthogonal to the range; restart on the largest diagonal
        let j = (0..m).max_by(|&a, &b| s[a * m + a].total_cmp(&s[b * m + b])).unwrap();
        q = vec![0.0; m];
        q[j] = 1.0;
        next = linalg::matvec(s, m, m, &q);
        if norm(&next) == 0.0 {
            return (q, true);
        }
    }
    let mut converged = false;
    for _ in 0..POWER_MAX_ITER {
        let nn = norm(&next);
        next.iter_mut().for_each(|v| *v /= nn);
        let diff = next.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut q, &mut next);
        if diff < POWER_TOL {
            converged = true;
            break;
        }
        next = linalg::matvec(s, m, m, &q);
    }
    fix_sign(&mut q);
    (q, converged)
}

struct Components {
    w: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    notes: Vec<String>,
}

fn component_loop(mut xty: Vec<f64>, k: usize, m: usize, a_max: usize, src: &mut dyn ScoreSource) -> Result<Components> {
    let mut c = Components {
        w: Vec::new(),
        p: Vec::new(),
        q: Vec::new(),
        r: Vec::new(),
        notes: Vec::new(),
    };
    let init_norm = norm(&xty);
    for a in 0..a_max {
        let cur = norm(&xty);
        if init_norm == 0.0 || cur <= EXHAUSTED_TOL * init_norm {
            c.notes.push(format!(
                "XᵀY exhausted after {a} component(s); truncated from {a_max}"
            ));
            break;
        }
        let mut w = if m == 1 {
            xty.clone()
        } else {
            let mut s = vec![0.0; m * m];
            for i in 0..k {
                let row = &xty[i * m..(i + 1) * m];
                for (u, &ru) in row.iter().enumerate() {
                    for (v, &rv) in row.iter().enumerate() {
                        s[u * m + v] += ru * rv;
                    }
                }
            }
            let (q, converged) = dominant_eigenvector(&s, m);
            if !converged {
                c.notes.push(format!(
                    "component {}: eigenvector iteration did not converge (near-repeated top eigenvalue)",
                    a + 1
                ));
            }
            linalg::matvec(&xty, k, m, &q)
        };
        let wn = norm(&w);
        if wn == 0.0 {
            c.notes.push(format!("weight vector vanished at component {}; truncated", a + 1));
            break;
        }
        w.iter_mut().for_each(|v| *v /= wn);
        fix_sign(&mut w);

        let mut r = w.clone();
        for (pj, rj) in c.p.iter().zip(&c.r) {
            let coef = dot(pj, &w);
            for (ri, &rji) in r.iter_mut().zip(rj) {
                *ri -= coef * rji;
            }
        }
        let (tt, p) = src.project(&r, a)?;
        let mut q = linalg::matvec_t(&xty, k, m, &r);
        q.iter_mut().for_each(|v| *v /= tt);
        for i in 0..k {
            let pi = p[i] * tt;
            for (j, &qj) in q.iter().enumerate() {
                xty[i * m + j] -= pi * qj;
            }
        }
        c.w.push(w);
        c.p.push(p);
        c.q.push(q);
        c.r.push(r);
    }
    Ok(c)
}

fn columns_to_matrix(cols: &[Vec<f64>], rows: usize, width: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, width);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

fn assemble(
    c: Components,
    k: usize,
    m: usize,
    a_max: usize,
    stats_x: ColumnStats,
    stats_y: ColumnStats,
    spec: PreprocessSpec,
) -> PlsModel {
    let components = c.w.len();
    let w = columns_to_matrix(&c.w, k, a_max);
    let p = columns_to_matrix(&c.p, k, a_max);
    let q = columns_to_matrix(&c.q, m, a_max);
    let r = columns_to_matrix(&c.r, k, a_max);
    let b_stack = build_b_stack(&r, &q, components, a_max);
    PlsModel {
        a_max,
        components,
        w,
        p,
        q,
        r,
        b_stack,
        stats_x,
        stats_y,
        spec,
        notes: c.notes,
        pipeline: String::new(),
    }
}

fn weighted_xty(x: &DenseMatrix, y: &DenseMatrix, weights: Option<&[f64]>) -> Vec<f64> {
    let (k, m) = (x.cols(), y.cols());
    let mut out = vec![0.0; k * m];
    for i in 0..x.rows() {
        let wi = weights.map_or(1.0, |w| w[i]);
        if wi == 0.0 {
            continue;
        }
        let yr = y.row(i);
        for (a, &xa) in x.row(i).iter().enumerate() {
            let c = wi * xa;
            for (o, &yb) in out[a * m..(a + 1) * m].iter_mut().zip(yr) {
                *o += c * yb;
            }
        }
    }
    out
}

/// IKPLS Algorithm #1 on a dataset.
pub fn fit_ikpls1(data: &Dataset, spec: &PreprocessSpec, a: usize) -> Result<PlsModel> {
    fit_ikpls1_with_scores(data, spec, a).map(|(m, _)| m)
}

/// Algorithm #1, also returning the N×A score matrix `T` (zero columns
/// past truncation).
pub fn fit_ikpls1_with_scores(data: &Dataset, spec: &PreprocessSpec, a: usize) -> Result<(PlsModel, DenseMatrix)> {
    let prep = prepare(data, spec)?;
    check_component_count(a, prep.stats_x.nonzero_weight_count, data.k())?;
    let (k, m) = (data.k(), data.m());
    let xty = weighted_xty(&prep.xp, &prep.yp, data.weights());
    let trace: f64 = (0..data.n())
        .map(|i| data.weight(i) * dot(prep.xp.row(i), prep.xp.row(i)))
        .sum();
    let mut src = FromX {
        x: &prep.xp,
        weights: data.weights(),
        trace,
        scores: Vec::new(),
    };
    let comps = component_loop(xty, k, m, a, &mut src)?;
    let t = columns_to_matrix(&src.scores, data.n(), a);
    Ok((assemble(comps, k, m, a, prep.stats_x, prep.stats_y, *spec), t))
}

/// IKPLS Algorithm #2 from already-preprocessed cross products.
///
/// `stats_x`/`stats_y` are the statistics the products were centred and
/// scaled with; they are frozen into the model for prediction.
pub fn fit_ikpls2(
    xtx: &DenseMatrix,
    xty: &DenseMatrix,
    stats_x: &ColumnStats,
    stats_y: &ColumnStats,
    spec: &PreprocessSpec,
    a: usize,
) -> Result<PlsModel> {
    let k = xtx.rows();
    if xtx.cols() != k {
        return Err(Error::invalid("XᵀX must be square"));
    }
    if xty.rows() != k {
        return Err(Error::DimensionMismatch {
            what: "XᵀY row count",
            expected: k,
            found: xty.rows(),
        });
    }
    if stats_x.len() != k || stats_y.len() != xty.cols() {
        return Err(Error::invalid("statistics do not match product dimensions"));
    }
    let scale = xtx.max_abs();
    for i in 0..k {
        for j in i + 1..k {
            if (xtx.get(i, j) - xtx.get(j, i)).abs() > 1e-10 * scale {
                return Err(Error::invalid("XᵀX is not symmetric"));
            }
        }
    }
    check_component_count(a, stats_x.nonzero_weight_count, k)?;
    let trace: f64 = (0..k).map(|i| xtx.get(i, i)).sum();
    let mut src = FromGram { xtx, trace };
    let comps = component_loop(xty.as_slice().to_vec(), k, xty.cols(), a, &mut src)?;
    Ok(assemble(
        comps,
        k,
        xty.cols(),
        a,
        stats_x.clone(),
        stats_y.clone(),
        *spec,
    ))
}

/// Algorithm #2 on a dataset: preprocesses, forms `XᵀΛX` and `XᵀΛY`, then
/// fits from the products.
pub fn fit_ikpls2_dataset(data: &Dataset, spec: &PreprocessSpec, a: usize) -> Result<PlsModel> {
    let prep = prepare(data, spec)?;
    let (xtx, xty) = linalg::cross_products(&prep.xp, &prep.yp, None, data.weights());
    let k = data.k();
    let xtx = DenseMatrix::from_parts(k, k, xtx);
    let xty = DenseMatrix::from_parts(k, data.m(), xty);
    fit_ikpls2(&xtx, &xty, &prep.stats_x, &prep.stats_y, spec, a)
}
