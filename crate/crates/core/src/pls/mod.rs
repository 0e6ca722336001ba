//! Partial least squares regression.
//!
//! Three solvers produce the same [`PlsModel`]: NIPALS (reference), and the
//! two Improved Kernel PLS variants. Algorithm #1 computes scores from X and
//! deflates only `XᵀY`; Algorithm #2 works from `XᵀX` and `XᵀY` alone and is
//! the one driven by fast cross-validation.
//!
//! Every fit keeps the regression matrices `B_1..B_A`, so predictions for
//! any component count up to `A` come from a single fit.

mod format;
mod ikpls;
mod nipals;

pub use format::{MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use ikpls::{fit_ikpls1, fit_ikpls1_with_scores, fit_ikpls2, fit_ikpls2_dataset};
pub use nipals::fit_nipals;

use crate::data::{Dataset, PreprocessSpec, ZeroVariancePolicy};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::preprocess::apply_center_scale;
use crate::stats::{column_stats, ColumnStats};

/// Relative size of the remaining `XᵀY` below which no further component
/// carries information.
pub(crate) const EXHAUSTED_TOL: f64 = 1e-12;

/// A fitted PLS model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub(crate) a_max: usize,
    pub(crate) components: usize,
    pub(crate) w: DenseMatrix,
    pub(crate) p: DenseMatrix,
    pub(crate) q: DenseMatrix,
    pub(crate) r: DenseMatrix,
    pub(crate) b_stack: Vec<DenseMatrix>,
    pub(crate) stats_x: ColumnStats,
    pub(crate) stats_y: ColumnStats,
    pub(crate) spec: PreprocessSpec,
    pub(crate) notes: Vec<String>,
    pub(crate) pipeline: String,
}

impl PlsModel {
    /// Requested component count `A`.
    pub fn a_max(&self) -> usize {
        self.a_max
    }

    /// Components actually extracted. Smaller than `a_max` when the data
    /// ran out of rank; `B_a` for `a` beyond this equals the last one.
    pub fn components(&self) -> usize {
        self.components
    }

    pub fn k(&self) -> usize {
        self.w.rows()
    }

    pub fn m(&self) -> usize {
        self.q.rows()
    }

    /// X weights, K×A, unit-norm columns.
    pub fn x_weights(&self) -> &DenseMatrix {
        &self.w
    }

    /// X loadings, K×A.
    pub fn x_loadings(&self) -> &DenseMatrix {
        &self.p
    }

    /// Y loadings, M×A.
    pub fn y_loadings(&self) -> &DenseMatrix {
        &self.q
    }

    /// Rotated weights `R` with `T = X·R`, K×A.
    pub fn x_rotations(&self) -> &DenseMatrix {
        &self.r
    }

    /// Regression matrix using the first `a` components (1-based).
    pub fn coefficients(&self, a: usize) -> Result<&DenseMatrix> {
        self.check_a(a)?;
        Ok(&self.b_stack[a - 1])
    }

    pub fn b_stack(&self) -> &[DenseMatrix] {
        &self.b_stack
    }

    pub fn stats_x(&self) -> &ColumnStats {
        &self.stats_x
    }

    pub fn stats_y(&self) -> &ColumnStats {
        &self.stats_y
    }

    pub fn spec(&self) -> PreprocessSpec {
        self.spec
    }

    /// Warnings recorded during fitting (truncation, non-convergence).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Row-wise pipeline the training X went through, as a pipeline string.
    pub fn pipeline(&self) -> &str {
        &self.pipeline
    }

    pub fn with_pipeline(mut self, pipeline: impl Into<String>) -> Self {
        self.pipeline = pipeline.into();
        self
    }

    fn check_a(&self, a: usize) -> Result<()> {
        if a == 0 || a > self.a_max {
            return Err(Error::invalid(format!(
                "component count {a} outside 1..={}",
                self.a_max
            )));
        }
        Ok(())
    }

    /// Centres/scales new predictors with the frozen training statistics.
    pub fn preprocess_x(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.k() {
            return Err(Error::DimensionMismatch {
                what: "predictor column count",
                expected: self.k(),
                found: x.cols(),
            });
        }
        apply_center_scale(
            x,
            &self.stats_x,
            self.spec.center_x,
            self.spec.scale_x,
            self.unit_for_zero(),
        )
    }

    fn unit_for_zero(&self) -> bool {
        self.spec.zero_variance == ZeroVariancePolicy::Unit
    }

    /// Maps preprocessed-space predictions back to Y units.
    fn restore_y(&self, mut yp: DenseMatrix) -> Result<DenseMatrix> {
        let div = if self.spec.scale_y {
            Some(self.stats_y.scale_divisors(self.unit_for_zero())?)
        } else {
            None
        };
        if div.is_none() && !self.spec.center_y {
            return Ok(yp);
        }
        for i in 0..yp.rows() {
            for (j, v) in yp.row_mut(i).iter_mut().enumerate() {
                if let Some(d) = &div {
                    *v *= d[j];
                }
                if self.spec.center_y {
                    *v += self.stats_y.mean[j];
                }
            }
        }
        Ok(yp)
    }

    pub fn predict(&self, x: &DenseMatrix, a: usize) -> Result<DenseMatrix> {
        self.check_a(a)?;
        let xp = self.preprocess_x(x)?;
        self.restore_y(xp.matmul(&self.b_stack[a - 1])?)
    }

    /// Predictions for every component count `1..=a_max`.
    pub fn predict_all(&self, x: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let xp = self.preprocess_x(x)?;
        self.b_stack
            .iter()
            .map(|b| self.restore_y(xp.matmul(b)?))
            .collect()
    }

    /// PLS-DA class decision. One-hot responses (M > 1) take the argmax;
    /// a single column is taken as ±1 coded and thresholded at 0.
    pub fn predict_class(&self, x: &DenseMatrix, a: usize) -> Result<Vec<usize>> {
        let coding = if self.m() > 1 {
            ClassCoding::OneHot
        } else {
            ClassCoding::Binary {
                low: -1.0,
                high: 1.0,
            }
        };
        self.predict_class_coded(x, a, coding)
    }

    pub fn predict_class_coded(&self, x: &DenseMatrix, a: usize, coding: ClassCoding) -> Result<Vec<usize>> {
        decode_classes(&self.predict(x, a)?, coding)
    }
}

/// How class membership is encoded in a response matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassCoding {
    /// One column per class; the largest prediction wins, ties go to the
    /// lowest class index.
    OneHot,
    /// Single column with two codes; predictions strictly above the
    /// midpoint are class 1.
    Binary { low: f64, high: f64 },
}

pub fn decode_classes(pred: &DenseMatrix, coding: ClassCoding) -> Result<Vec<usize>> {
    match coding {
        ClassCoding::OneHot => Ok(pred
            .row_iter()
            .map(|r| {
                let mut best = 0;
                for (j, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()),
        ClassCoding::Binary { low, high } => {
            if pred.cols() != 1 {
                return Err(Error::DimensionMismatch {
                    what: "binary-coded response columns",
                    expected: 1,
                    found: pred.cols(),
                });
            }
            let mid = 0.5 * (low + high);
            Ok(pred
                .as_slice()
                .iter()
                .map(|&v| usize::from(v > mid))
                .collect())
        }
    }
}

/// Reads class labels back out of a response matrix: one-hot rows for
/// M > 1, or a single column holding exactly two distinct codes.
pub fn classes_from_responses(y: &DenseMatrix) -> Result<(Vec<usize>, ClassCoding)> {
    let not_classes = || Error::invalid("responses do not encode classes (need one-hot rows or a two-valued column)");
    if y.cols() > 1 {
        let mut labels = Vec::with_capacity(y.rows());
        for r in y.row_iter() {
            let ones: Vec<usize> = (0..r.len()).filter(|&j| r[j] == 1.0).collect();
            if ones.len() != 1 || r.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(not_classes());
            }
            labels.push(ones[0]);
        }
        Ok((labels, ClassCoding::OneHot))
    } else {
        let col = y.as_slice();
        let mut distinct: Vec<f64> = col.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() != 2 {
            return Err(not_classes());
        }
        let (low, high) = (distinct[0], distinct[1]);
        let labels = col.iter().map(|&v| usize::from(v == high)).collect();
        Ok((labels, ClassCoding::Binary { low, high }))
    }
}

/// Preprocessed training data plus the statistics it was built from.
pub(crate) struct Prepared {
    pub xp: DenseMatrix,
    pub yp: DenseMatrix,
    pub stats_x: ColumnStats,
    pub stats_y: ColumnStats,
}

pub(crate) fn prepare(data: &Dataset, spec: &PreprocessSpec) -> Result<Prepared> {
    let w = data.weights();
    let stats_x = column_stats(data.x(), w, true)?;
    let stats_y = column_stats(data.y(), w, true)?;
    let unit = spec.zero_variance == ZeroVariancePolicy::Unit;
    let xp = apply_center_scale(data.x(), &stats_x, spec.center_x, spec.scale_x, unit)?;
    let yp = apply_center_scale(data.y(), &stats_y, spec.center_y, spec.scale_y, unit)?;
    Ok(Prepared {
        xp,
        yp,
        stats_x,
        stats_y,
    })
}

pub(crate) fn check_component_count(a: usize, n_eff: usize, k: usize) -> Result<()> {
    let limit = n_eff.saturating_sub(1).min(k);
    if a == 0 || a > limit {
        return Err(Error::invalid(format!(
            "component count {a} must be in 1..={limit} (min(N-1, K))"
        )));
    }
    Ok(())
}

/// Flips `v` so its first entry with magnitude above 1e-12 is positive.
/// Returns whether a flip happened.
pub(crate) fn fix_sign(v: &mut [f64]) -> bool {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            return true;
        }
    }
    false
}

/// Accumulates `B_a = Σ_{j≤a} r_j q_jᵀ`; once components run out the last
/// matrix is repeated.
pub(crate) fn build_b_stack(r: &DenseMatrix, q: &DenseMatrix, components: usize, a_max: usize) -> Vec<DenseMatrix> {
    let (k, m) = (r.rows(), q.rows());
    let mut acc = DenseMatrix::zeros(k, m);
    let mut out = Vec::with_capacity(a_max);
    for a in 0..a_max {
        if a < components {
            for i in 0..k {
                let ri = r.get(i, a);
                for j in 0..m {
                    let v = acc.get(i, j) + ri * q.get(j, a);
                    acc.set(i, j, v);
                }
            }
        }
        out.push(acc.clone());
    }
    out
}
