//! Training-fold cross products for cross-validation in the time of one
//! global product pass.
//!
//! A single sweep over the rows accumulates, for every fold `p`, the fold's
//! contribution `C_p` (its `XᵀΛX`, `XᵀΛY`, column sums, response sums of
//! squares, weight total and non-zero weight count). Training-partition raw
//! sums for fold `p` are then `C_0 + … + C_{p−1} + C_{p+1} + … + C_{P−1}`,
//! obtained from prefix and suffix sums without revisiting any row. Each
//! row is touched once, so the cost is Θ(NK(K+M)) for any fold count.
//!
//! Centering and scaling are applied algebraically from the training sums:
//!
//! ```text
//! μ = S / W                       (W = Σ training weights)
//! XᵀΛX_c = XᵀΛX − W·μ_Xᵀμ_X       (center X)
//! XᵀΛY_c = XᵀΛY − W·μ_Xᵀμ_Y       (center X, Y or both)
//! D_X⁻¹·XᵀΛX·D_X⁻¹, D_X⁻¹·XᵀΛY·D_Y⁻¹   (scale)
//! ```
//!
//! Because training sums never include the held-out fold's contribution,
//! changing a validation row cannot change its training products, not even
//! in the last bit.
//!
//! [`StreamingProducts`] is the low-memory alternative: it keeps only the
//! totals and the current fold, deriving training sums as `total − C_p`.

use rayon::prelude::*;

use crate::data::{Dataset, FoldSpec, PreprocessSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::DenseMatrix;
use crate::preprocess::apply_center_scale;
use crate::stats::{column_stats, nist_variance, ColumnStats, NeumaierSum};

/// Raw (unpreprocessed) weighted sums over some set of rows.
///
/// `XᵀΛX` is symmetric, so only its upper triangle is kept, interleaved
/// with `XᵀΛY`: row `i` holds `(XᵀΛX)_{i,i..K}` followed by
/// `(XᵀΛY)_{i,·}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSums {
    k: usize,
    m: usize,
    packed: Vec<f64>,
    pub sum_x: Vec<f64>,
    pub sum_y: Vec<f64>,
    pub sum_sq_y: Vec<f64>,
    pub weight: f64,
    pub nonzero: usize,
}

impl RawSums {
    /// Sums over `rows` (all rows when `None`).
    fn over(data: &Dataset, rows: Option<&[usize]>) -> Self {
        let (k, m) = (data.k(), data.m());
        let upper = linalg::cross_products_upper(data.x(), data.y(), rows, data.weights());
        let width = k + m;
        let mut packed = Vec::with_capacity(packed_len(k, m));
        for i in 0..k {
            packed.extend_from_slice(&upper[i * width + i..(i + 1) * width]);
        }
        drop(upper);
        let mut sx = vec![NeumaierSum::new(); k];
        let mut sy = vec![NeumaierSum::new(); m];
        let mut sqy = vec![NeumaierSum::new(); m];
        let mut w_tot = NeumaierSum::new();
        let mut nonzero = 0;
        let mut visit = |i: usize| {
            let w = data.weight(i);
            if w == 0.0 {
                return;
            }
            nonzero += 1;
            w_tot.add(w);
            for (s, &v) in sx.iter_mut().zip(data.x().row(i)) {
                s.add(w * v);
            }
            for ((s, q), &v) in sy.iter_mut().zip(sqy.iter_mut()).zip(data.y().row(i)) {
                s.add(w * v);
                q.add(w * v * v);
            }
        };
        match rows {
            Some(r) => r.iter().copied().for_each(&mut visit),
            None => (0..data.n()).for_each(&mut visit),
        }
        let v = |s: Vec<NeumaierSum>| s.iter().map(NeumaierSum::value).collect::<Vec<_>>();
        Self {
            k,
            m,
            packed,
            sum_x: v(sx),
            sum_y: v(sy),
            sum_sq_y: v(sqy),
            weight: w_tot.value(),
            nonzero,
        }
    }

    fn add(&self, other: &RawSums) -> RawSums {
        let mut out = self.clone();
        out.accumulate(other, 1.0);
        out
    }

    fn sub(&self, other: &RawSums) -> RawSums {
        let mut out = self.clone();
        out.accumulate(other, -1.0);
        out
    }

    fn accumulate(&mut self, other: &RawSums, sign: f64) {
        let acc = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += sign * y);
        acc(&mut self.packed, &other.packed);
        acc(&mut self.sum_x, &other.sum_x);
        acc(&mut self.sum_y, &other.sum_y);
        acc(&mut self.sum_sq_y, &other.sum_sq_y);
        self.weight += sign * other.weight;
        if sign > 0.0 {
            self.nonzero += other.nonzero;
        } else {
            self.nonzero -= other.nonzero;
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    fn row_offset(&self, i: usize) -> usize {
        i * (self.k + self.m) - i * i.saturating_sub(1) / 2
    }

    /// `(XᵀΛX)_{ij}`.
    pub fn xtx(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.packed[self.row_offset(a) + (b - a)]
    }

    /// `(XᵀΛY)_{ic}`.
    pub fn xty(&self, i: usize, c: usize) -> f64 {
        self.packed[self.row_offset(i) + (self.k - i) + c]
    }

    pub fn xtx_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.k, self.k, |i, j| self.xtx(i, j))
    }

    pub fn xty_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.k, self.m, |i, c| self.xty(i, c))
    }
}

fn packed_len(k: usize, m: usize) -> usize {
    k * (k + 1) / 2 + k * m
}

/// Preprocessed training-partition products for one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct CvProducts {
    pub fold: usize,
    pub xtx_train: DenseMatrix,
    pub xty_train: DenseMatrix,
    pub stats_x_train: ColumnStats,
    pub stats_y_train: ColumnStats,
}

/// Prefix and suffix sums of the per-fold contributions in fold order.
#[derive(Debug)]
pub struct GlobalProducts<'a> {
    data: &'a Dataset,
    folds: &'a FoldSpec,
    /// `prefix[p] = C_0 + … + C_{p−1}`, for `p` in `1..P`.
    prefix: Vec<RawSums>,
    /// `suffix[p] = C_p + … + C_{P−1}`; `suffix[0]` is the total.
    suffix: Vec<RawSums>,
}

pub fn precompute<'a>(data: &'a Dataset, folds: &'a FoldSpec) -> Result<GlobalProducts<'a>> {
    folds.check_rows(data.n())?;
    let groups = folds.groups();
    let mut suffix: Vec<RawSums> = groups
        .par_iter()
        .map(|rows| RawSums::over(data, Some(rows)))
        .collect();
    drop(groups);
    let p = suffix.len();
    let mut prefix: Vec<RawSums> = Vec::with_capacity(p.saturating_sub(1));
    for i in 1..p {
        let next = match prefix.last() {
            Some(last) => last.add(&suffix[i - 1]),
            None => suffix[0].clone(),
        };
        prefix.push(next);
    }
    for i in (0..p - 1).rev() {
        let (head, tail) = suffix.split_at_mut(i + 1);
        head[i].accumulate(&tail[0], 1.0);
    }
    Ok(GlobalProducts {
        data,
        folds,
        prefix,
        suffix,
    })
}

impl<'a> GlobalProducts<'a> {
    pub fn n_folds(&self) -> usize {
        self.suffix.len()
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn folds(&self) -> &'a FoldSpec {
        self.folds
    }

    pub fn total(&self) -> &RawSums {
        &self.suffix[0]
    }

    /// Contribution of fold `p`'s own rows, recomputed from those rows.
    pub fn validation(&self, fold: usize) -> Result<RawSums> {
        if fold >= self.n_folds() {
            return Err(Error::invalid(format!("fold {fold} does not exist")));
        }
        Ok(RawSums::over(self.data, Some(&self.folds.validation_rows(fold))))
    }

    /// Raw sums over every row outside `fold`.
    pub fn training_raw(&self, fold: usize) -> Result<RawSums> {
        let p = self.n_folds();
        if fold >= p {
            return Err(Error::invalid(format!("fold {fold} does not exist")));
        }
        Ok(match (fold, fold + 1 < p) {
            (0, _) => self.suffix[1].clone(),
            (f, true) => self.prefix[f - 1].add(&self.suffix[f + 1]),
            (f, false) => self.prefix[f - 1].clone(),
        })
    }

    pub fn training_products(&self, fold: usize, spec: &PreprocessSpec) -> Result<CvProducts> {
        let raw = self.training_raw(fold)?;
        derive(self.data, self.folds, fold, raw, spec)
    }
}

pub fn training_products(g: &GlobalProducts<'_>, fold: usize, spec: &PreprocessSpec) -> Result<CvProducts> {
    g.training_products(fold, spec)
}

/// Below this fraction of the raw sum of squares the sum-of-squares
/// variance identity has lost too many digits; the column is redone with a
/// two-pass sweep.
const CANCELLATION_TOL: f64 = 1e-12;

fn derive(data: &Dataset, folds: &FoldSpec, fold: usize, raw: RawSums, spec: &PreprocessSpec) -> Result<CvProducts> {
    let (k, m) = (raw.k, raw.m);
    if raw.nonzero == 0 || raw.weight <= 0.0 {
        return Err(Error::invalid(format!(
            "training partition of fold {fold} has no positive weight"
        )));
    }
    let w = raw.weight;
    let mean_x: Vec<f64> = raw.sum_x.iter().map(|s| s / w).collect();
    let mean_y: Vec<f64> = raw.sum_y.iter().map(|s| s / w).collect();

    let mut train_rows: Option<Vec<usize>> = None;
    let mut dev_x = Vec::with_capacity(k);
    for j in 0..k {
        let ssq = raw.xtx(j, j);
        let dev = ssq - w * mean_x[j] * mean_x[j];
        dev_x.push(if dev < CANCELLATION_TOL * ssq {
            let rows = train_rows.get_or_insert_with(|| folds.training_rows(fold));
            two_pass_dev(data.x(), j, rows, data.weights(), w)
        } else {
            dev
        });
    }
    let mut dev_y = Vec::with_capacity(m);
    for j in 0..m {
        let ssq = raw.sum_sq_y[j];
        let dev = ssq - w * mean_y[j] * mean_y[j];
        dev_y.push(if dev < CANCELLATION_TOL * ssq {
            let rows = train_rows.get_or_insert_with(|| folds.training_rows(fold));
            two_pass_dev(data.y(), j, rows, data.weights(), w)
        } else {
            dev
        });
    }
    let std_of = |dev: &[f64]| -> Vec<f64> {
        dev.iter()
            .map(|&d| nist_variance(d, w, raw.nonzero).sqrt())
            .collect()
    };
    let sum_sq_x: Vec<f64> = (0..k).map(|j| raw.xtx(j, j)).collect();
    let stats_x = ColumnStats {
        std: std_of(&dev_x),
        mean: mean_x,
        sum: raw.sum_x.clone(),
        sum_sq: sum_sq_x,
        weight_total: w,
        nonzero_weight_count: raw.nonzero,
    };
    let stats_y = ColumnStats {
        std: std_of(&dev_y),
        mean: mean_y,
        sum: raw.sum_y.clone(),
        sum_sq: raw.sum_sq_y.clone(),
        weight_total: w,
        nonzero_weight_count: raw.nonzero,
    };

    let unit = spec.unit_for_zero();
    let dx = if spec.scale_x { stats_x.scale_divisors(unit)? } else { vec![1.0; k] };
    let dy = if spec.scale_y { stats_y.scale_divisors(unit)? } else { vec![1.0; m] };
    let cx: Vec<f64> = if spec.center_x { stats_x.mean.clone() } else { vec![0.0; k] };
    // one centring term for XᵀY whether X, Y or both are centred
    let center_xy = spec.center_x || spec.center_y;
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k * m];
    for i in 0..k {
        let off = raw.row_offset(i);
        let row = &raw.packed[off..off + (k - i) + m];
        let wi = w * cx[i];
        for j in i..k {
            let v = (row[j - i] - wi * cx[j]) / (dx[i] * dx[j]);
            xtx[i * k + j] = v;
            xtx[j * k + i] = v;
        }
        let wmx = w * stats_x.mean[i];
        for c in 0..m {
            let mut v = row[k - i + c];
            if center_xy {
                v -= wmx * stats_y.mean[c];
            }
            xty[i * m + c] = v / (dx[i] * dy[c]);
        }
    }
    Ok(CvProducts {
        fold,
        xtx_train: DenseMatrix::from_parts(k, k, xtx),
        xty_train: DenseMatrix::from_parts(k, m, xty),
        stats_x_train: stats_x,
        stats_y_train: stats_y,
    })
}

/// Σ wᵢ (x_ij − μ)² over `rows` by a corrected two-pass sweep, recomputing
/// the mean on the way.
fn two_pass_dev(x: &DenseMatrix, j: usize, rows: &[usize], weights: Option<&[f64]>, w_total: f64) -> f64 {
    let wt = |i: usize| weights.map_or(1.0, |w| w[i]);
    let s: NeumaierSum = rows.iter().map(|&i| wt(i) * x.get(i, j)).collect();
    let mu = s.value() / w_total;
    let mut d2 = NeumaierSum::new();
    let mut d1 = NeumaierSum::new();
    for &i in rows {
        let w = wt(i);
        if w == 0.0 {
            continue;
        }
        let d = x.get(i, j) - mu;
        d2.add(w * d * d);
        d1.add(w * d);
    }
    let d1 = d1.value();
    (d2.value() - d1 * d1 / w_total).max(0.0)
}

/// Fold-at-a-time products using `O(K(K+M))` working memory beyond the
/// inputs: the totals plus the current fold's contribution.
pub struct StreamingProducts<'a> {
    data: &'a Dataset,
    folds: &'a FoldSpec,
    spec: PreprocessSpec,
    total: RawSums,
    next: usize,
}

pub fn stream<'a>(data: &'a Dataset, folds: &'a FoldSpec, spec: &PreprocessSpec) -> Result<StreamingProducts<'a>> {
    folds.check_rows(data.n())?;
    Ok(StreamingProducts {
        data,
        folds,
        spec: *spec,
        total: RawSums::over(data, None),
        next: 0,
    })
}

impl Iterator for StreamingProducts<'_> {
    type Item = Result<CvProducts>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.folds.n_folds() {
            return None;
        }
        let fold = self.next;
        self.next += 1;
        let rows = self.folds.validation_rows(fold);
        let val = RawSums::over(self.data, Some(&rows));
        drop(rows);
        let raw = self.total.sub(&val);
        drop(val);
        Some(derive(self.data, self.folds, fold, raw, &self.spec))
    }
}

/// Reference path: materialise the training rows, preprocess them
/// explicitly and multiply. Costs Θ(NK(K+M)) per fold.
pub fn naive_training_products(
    data: &Dataset,
    folds: &FoldSpec,
    fold: usize,
    spec: &PreprocessSpec,
) -> Result<CvProducts> {
    folds.check_rows(data.n())?;
    if fold >= folds.n_folds() {
        return Err(Error::invalid(format!("fold {fold} does not exist")));
    }
    let train = data.select_rows(&folds.training_rows(fold))?;
    let w = train.weights();
    let stats_x = column_stats(train.x(), w, true)?;
    let stats_y = column_stats(train.y(), w, true)?;
    let unit = spec.unit_for_zero();
    let xp = apply_center_scale(train.x(), &stats_x, spec.center_x, spec.scale_x, unit)?;
    let yp = apply_center_scale(train.y(), &stats_y, spec.center_y, spec.scale_y, unit)?;
    let (n, k, m) = (train.n(), train.k(), train.m());
    let mut xtx = DenseMatrix::zeros(k, k);
    let mut xty = DenseMatrix::zeros(k, m);
    for a in 0..k {
        for b in 0..k {
            let v: f64 = (0..n).map(|i| train.weight(i) * xp.get(i, a) * xp.get(i, b)).sum();
            xtx.set(a, b, v);
        }
        for b in 0..m {
            let v: f64 = (0..n).map(|i| train.weight(i) * xp.get(i, a) * yp.get(i, b)).sum();
            xty.set(a, b, v);
        }
    }
    Ok(CvProducts {
        fold,
        xtx_train: xtx,
        xty_train: xty,
        stats_x_train: stats_x,
        stats_y_train: stats_y,
    })
}

/// Baseline for benchmarks: materialises each training partition and forms
/// its products with the same kernel as [`precompute`], so timings compare
/// algorithms rather than loop quality.
pub fn recomputed_training_products(
    data: &Dataset,
    folds: &FoldSpec,
    fold: usize,
    spec: &PreprocessSpec,
) -> Result<CvProducts> {
    folds.check_rows(data.n())?;
    if fold >= folds.n_folds() {
        return Err(Error::invalid(format!("fold {fold} does not exist")));
    }
    let train = data.select_rows(&folds.training_rows(fold))?;
    let w = train.weights();
    let stats_x = column_stats(train.x(), w, true)?;
    let stats_y = column_stats(train.y(), w, true)?;
    let unit = spec.unit_for_zero();
    let xp = apply_center_scale(train.x(), &stats_x, spec.center_x, spec.scale_x, unit)?;
    let yp = apply_center_scale(train.y(), &stats_y, spec.center_y, spec.scale_y, unit)?;
    let (xtx, xty) = linalg::cross_products(&xp, &yp, None, w);
    let (k, m) = (train.k(), train.m());
    Ok(CvProducts {
        fold,
        xtx_train: DenseMatrix::from_parts(k, k, xtx),
        xty_train: DenseMatrix::from_parts(k, m, xty),
        stats_x_train: stats_x,
        stats_y_train: stats_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_example() -> (Dataset, FoldSpec) {
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]).unwrap();
        let y = DenseMatrix::column_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        (
            Dataset::new(x, y, None).unwrap(),
            FoldSpec::new(vec![0, 0, 1, 1]).unwrap(),
        )
    }

    #[test]
    fn totals_and_fold_contribution() {
        let (d, f) = running_example();
        let g = precompute(&d, &f).unwrap();
        assert_eq!(g.total().xtx_matrix().as_slice(), &[84.0, 100.0, 100.0, 120.0]);
        assert_eq!(g.total().xty_matrix().as_slice(), &[50.0, 60.0]);
        let v = g.validation(0).unwrap();
        assert_eq!(v.xtx_matrix().as_slice(), &[10.0, 14.0, 14.0, 20.0]);
        assert_eq!(v.xty_matrix().as_slice(), &[7.0, 10.0]);
    }

    #[test]
    fn training_products_raw_and_centered() {
        let (d, f) = running_example();
        let g = precompute(&d, &f).unwrap();
        let raw = g.training_products(0, &PreprocessSpec::NONE).unwrap();
        assert_eq!(raw.xtx_train.as_slice(), &[74.0, 86.0, 86.0, 100.0]);
        assert_eq!(raw.xty_train.as_slice(), &[43.0, 50.0]);
        let c = g.training_products(0, &"cx,cy".parse().unwrap()).unwrap();
        for (a, b) in c.xtx_train.as_slice().iter().zip([2.0, 2.0, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in c.xty_train.as_slice().iter().zip([1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loocv_contribution_is_outer_product() {
        let (d, _) = running_example();
        let f = FoldSpec::leave_one_out(4).unwrap();
        let g = precompute(&d, &f).unwrap();
        let r = d.x().row(2);
        assert_eq!(
            g.validation(2).unwrap().xtx_matrix().as_slice(),
            &[r[0] * r[0], r[0] * r[1], r[1] * r[0], r[1] * r[1]]
        );
    }

    #[test]
    fn zero_weight_fold_contributes_nothing() {
        let (d, f) = running_example();
        let d = Dataset::new(d.x().clone(), d.y().clone(), Some(vec![0.0, 0.0, 1.0, 2.0])).unwrap();
        let g = precompute(&d, &f).unwrap();
        let v = g.validation(0).unwrap();
        assert!(v.xtx_matrix().max_abs() == 0.0 && v.xty_matrix().max_abs() == 0.0);
        assert_eq!(v.weight, 0.0);
        // fold 1's training side then has no weight at all
        assert!(g.training_products(1, &PreprocessSpec::NONE).is_err());
    }

    #[test]
    fn streaming_matches_retained() {
        let (d, f) = running_example();
        let g = precompute(&d, &f).unwrap();
        let spec: PreprocessSpec = "cx,sx,sy".parse().unwrap();
        let streamed: Vec<CvProducts> = stream(&d, &f, &spec).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(streamed.len(), 2);
        for s in streamed {
            let r = g.training_products(s.fold, &spec).unwrap();
            assert!(s.xtx_train.max_abs_diff(&r.xtx_train) < 1e-12);
            assert!(s.xty_train.max_abs_diff(&r.xty_train) < 1e-12);
        }
    }

    #[test]
    fn constant_training_column_falls_back_and_errors_when_scaled() {
        let x = DenseMatrix::from_rows(&[[1e8, 1.0], [1e8, 2.0], [1e8, 4.0], [3.0, 8.0]]).unwrap();
        let y = DenseMatrix::column_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = Dataset::new(x, y, None).unwrap();
        let f = FoldSpec::new(vec![0, 0, 0, 1]).unwrap();
        let g = precompute(&d, &f).unwrap();
        let p = g.training_products(1, &PreprocessSpec::NONE).unwrap();
        assert_eq!(p.stats_x_train.std[0], 0.0);
        assert!(matches!(
            g.training_products(1, &"sx".parse().unwrap()),
            Err(Error::ZeroVarianceColumn { column: 0 })
        ));
        assert!(matches!(
            naive_training_products(&d, &f, 1, &"sx".parse().unwrap()),
            Err(Error::ZeroVarianceColumn { column: 0 })
        ));
    }
}
