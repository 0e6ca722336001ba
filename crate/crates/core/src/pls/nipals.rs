//! NIPALS PLS2, used as the reference solver.
//!
//! Works on explicitly deflated copies of X and Y (rows scaled by `√wᵢ` in
//! the weighted case) and recovers the rotation `R = W(PᵀW)⁻¹` with a dense
//! solve, so it shares no numerical path with the kernel algorithms.

use crate::data::{Dataset, PreprocessSpec};
use crate::error::Result;
use crate::linalg;
use crate::matrix::DenseMatrix;

use super::{build_b_stack, check_component_count, fix_sign, prepare, PlsModel, EXHAUSTED_TOL};

const INNER_TOL: f64 = 1e-12;
const INNER_MAX_ITER: usize = 1000;

fn col_dot(m: &DenseMatrix, a: usize, v: &[f64]) -> f64 {
    // mᵀ[:,a]·v over rows
    m.row_iter().zip(v).map(|(r, &x)| r[a] * x).sum()
}

fn xt_times(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..m.cols()).map(|a| col_dot(m, a, v)).collect()
}

fn times(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    m.row_iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn fit_nipals(data: &Dataset, spec: &PreprocessSpec, a_max: usize) -> Result<PlsModel> {
    let prep = prepare(data, spec)?;
    check_component_count(a_max, prep.stats_x.nonzero_weight_count, data.k())?;
    let (n, k, m) = (data.n(), data.k(), data.m());

    let mut x = prep.xp;
    let mut y = prep.yp;
    if let Some(w) = data.weights() {
        for i in 0..n {
            let s = w[i].sqrt();
            x.row_mut(i).iter_mut().for_each(|v| *v *= s);
            y.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
    }

    let cross_norm = |x: &DenseMatrix, y: &DenseMatrix| -> f64 {
        (0..m)
            .map(|j| sq_norm(&xt_times(x, &y.column(j))))
            .sum::<f64>()
            .sqrt()
    };
    let init_norm = cross_norm(&x, &y);

    let mut ws: Vec<Vec<f64>> = Vec::new();
    let mut ps: Vec<Vec<f64>> = Vec::new();
    let mut qs: Vec<Vec<f64>> = Vec::new();
    let mut notes = Vec::new();

    for a in 0..a_max {
        if init_norm == 0.0 || cross_norm(&x, &y) <= EXHAUSTED_TOL * init_norm {
            notes.push(format!("XᵀY exhausted after {a} component(s); truncated from {a_max}"));
            break;
        }
        // start from the response column with the largest sum of squares
        let start = (0..m)
            .max_by(|&i, &j| sq_norm(&y.column(i)).total_cmp(&sq_norm(&y.column(j))))
            .unwrap();
        let mut u = y.column(start);
        let mut w_prev: Option<Vec<f64>> = None;
        let mut converged = false;
        let (mut w, mut t, mut q) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..INNER_MAX_ITER {
            w = xt_times(&x, &u);
            let wn = sq_norm(&w).sqrt();
            if wn == 0.0 {
                break;
            }
            w.iter_mut().for_each(|v| *v /= wn);
            t = times(&x, &w);
            let tt = sq_norm(&t);
            q = xt_times(&y, &t).into_iter().map(|v| v / tt).collect();
            let qq = sq_norm(&q);
            u = times(&y, &q).into_iter().map(|v| v / qq).collect();
            if let Some(prev) = &w_prev {
                let diff: f64 = w.iter().zip(prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if diff < INNER_TOL {
                    converged = true;
                    break;
                }
            }
            w_prev = Some(w.clone());
        }
        if w.is_empty() || sq_norm(&w) == 0.0 {
            notes.push(format!("weight vector vanished at component {}; truncated", a + 1));
            break;
        }
        if !converged {
            notes.push(format!(
                "component {}: inner iteration did not converge within {INNER_MAX_ITER} steps",
                a + 1
            ));
        }
        if fix_sign(&mut w) {
            t.iter_mut().for_each(|v| *v = -*v);
            q.iter_mut().for_each(|v| *v = -*v);
        }
        let tt = sq_norm(&t);
        let p: Vec<f64> = xt_times(&x, &t).into_iter().map(|v| v / tt).collect();
        for i in 0..n {
            let ti = t[i];
            for (v, &pj) in x.row_mut(i).iter_mut().zip(&p) {
                *v -= ti * pj;
            }
            for (v, &qj) in y.row_mut(i).iter_mut().zip(&q) {
                *v -= ti * qj;
            }
        }
        ws.push(w);
        ps.push(p);
        qs.push(q);
    }

    let c = ws.len();
    let mut w_mat = DenseMatrix::zeros(k, a_max);
    let mut p_mat = DenseMatrix::zeros(k, a_max);
    let mut q_mat = DenseMatrix::zeros(m, a_max);
    let mut r_mat = DenseMatrix::zeros(k, a_max);
    for j in 0..c {
        for i in 0..k {
            w_mat.set(i, j, ws[j][i]);
            p_mat.set(i, j, ps[j][i]);
        }
        for i in 0..m {
            q_mat.set(i, j, qs[j][i]);
        }
    }
    if c > 0 {
        // R = W (PᵀW)⁻¹  ⇔  (WᵀP) Rᵀ = Wᵀ
        let wc = DenseMatrix::from_fn(k, c, |i, j| ws[j][i]);
        let pc = DenseMatrix::from_fn(k, c, |i, j| ps[j][i]);
        let wtp = wc.transpose().matmul(&pc)?;
        let rt = linalg::solve(&wtp, &wc.transpose())?;
        for j in 0..c {
            for i in 0..k {
                r_mat.set(i, j, rt.get(j, i));
            }
        }
    }
    let b_stack = build_b_stack(&r_mat, &q_mat, c, a_max);
    Ok(PlsModel {
        a_max,
        components: c,
        w: w_mat,
        p: p_mat,
        q: q_mat,
        r: r_mat,
        b_stack,
        stats_x: prep.stats_x,
        stats_y: prep.stats_y,
        spec: *spec,
        notes,
        pipeline: String::new(),
    })
}
