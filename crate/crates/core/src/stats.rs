//! Column statistics with compensated summation.
//!
//! Weighted standard deviations use the NIST weighted sample variance
//!
//! ```text
//! σ² = N'·Σ wᵢ (xᵢ − μ)² / ((N' − 1)·Σ wᵢ)
//! ```
//!
//! where `N'` counts the non-zero weights. With unit weights this is the
//! ordinary `n − 1` sample variance, and it is invariant to rescaling the
//! weights.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::data::validate_weights;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Neumaier's improvement of Kahan–Babuška compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn neumaier_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Per-column (weighted) summary of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// NIST weighted standard deviation; all zeros when undefined
    /// (`nonzero_weight_count < 2`).
    pub std: Vec<f64>,
    /// Σ wᵢ xᵢ
    pub sum: Vec<f64>,
    /// Σ wᵢ xᵢ²
    pub sum_sq: Vec<f64>,
    pub weight_total: f64,
    pub nonzero_weight_count: usize,
}

impl ColumnStats {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std_defined(&self) -> bool {
        self.nonzero_weight_count >= 2
    }

    /// Standard deviations to divide by, honouring the zero-variance
    /// policy. Errors if the std is undefined or a column is constant and
    /// `unit_for_zero` is false.
    pub fn scale_divisors(&self, unit_for_zero: bool) -> Result<Vec<f64>> {
        if !self.std_defined() {
            return Err(Error::StdUndefined {
                nonzero: self.nonzero_weight_count,
            });
        }
        self.std
            .iter()
            .zip(&self.mean)
            .enumerate()
            .map(|(j, (&s, &m))| {
                if is_zero_std(s, m) {
                    if unit_for_zero {
                        Ok(1.0)
                    } else {
                        Err(Error::ZeroVarianceColumn { column: j })
                    }
                } else {
                    Ok(s)
                }
            })
            .collect()
    }
}

/// A std counts as zero when it is indistinguishable from rounding noise
/// on the column mean.
pub(crate) fn is_zero_std(std: f64, mean: f64) -> bool {
    std <= 1e-14 * mean.abs() || std == 0.0
}

/// NIST weighted variance from the weighted sum of squared deviations.
#[inline]
pub(crate) fn nist_variance(dev_sq: f64, weight_total: f64, nonzero: usize) -> f64 {
    if nonzero < 2 {
        return 0.0;
    }
    let n = nonzero as f64;
    (n * dev_sq.max(0.0)) / ((n - 1.0) * weight_total)
}

pub fn column_stats(x: &DenseMatrix, weights: Option<&[f64]>, two_pass: bool) -> Result<ColumnStats> {
    column_stats_rows(x, None, weights, two_pass)
}

/// Column statistics restricted to `rows` (all rows when `None`). Weights
/// are indexed by absolute row number.
pub fn column_stats_rows(
    x: &DenseMatrix,
    rows: Option<&[usize]>,
    weights: Option<&[f64]>,
    two_pass: bool,
) -> Result<ColumnStats> {
    if let Some(w) = weights {
        validate_weights(w, x.rows())?;
    }
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..x.rows()).collect();
            &all
        }
    };
    let k = x.cols();
    let w_of = |i: usize| weights.map_or(1.0, |w| w[i]);

    let mut w_total = NeumaierSum::new();
    let mut nonzero = 0usize;
    let mut sum = vec![NeumaierSum::new(); k];
    let mut sum_sq = vec![NeumaierSum::new(); k];
    for &i in rows {
        let w = w_of(i);
        if w == 0.0 {
            continue;
        }
        nonzero += 1;
        w_total.add(w);
        for ((s, q), &v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(x.row(i)) {
            s.add(w * v);
            q.add(w * v * v);
        }
    }
    if nonzero == 0 {
        return Err(Error::invalid("no rows with positive weight"));
    }
    let w_total = w_total.value();
    let sum: Vec<f64> = sum.iter().map(NeumaierSum::value).collect();
    let sum_sq: Vec<f64> = sum_sq.iter().map(NeumaierSum::value).collect();
    let mean: Vec<f64> = sum.iter().map(|s| s / w_total).collect();

    let dev_sq: Vec<f64> = if two_pass {
        let mut d2 = vec![NeumaierSum::new(); k];
        let mut d1 = vec![NeumaierSum::new(); k];
        for &i in rows {
            let w = w_of(i);
            if w == 0.0 {
                continue;
            }
            for j in 0..k {
                let d = x.get(i, j) - mean[j];
                d2[j].add(w * d * d);
                d1[j].add(w * d);
            }
        }
        // corrected two-pass: subtract the residual first-moment error
        d2.iter()
            .zip(&d1)
            .map(|(a, b)| {
                let b = b.value();
                (a.value() - b * b / w_total).max(0.0)
            })
            .collect()
    } else {
        sum_sq
            .iter()
            .zip(&sum)
            .map(|(q, s)| (q - s * s / w_total).max(0.0))
            .collect()
    };
    let std = dev_sq
        .iter()
        .map(|&d| nist_variance(d, w_total, nonzero).sqrt())
        .collect();
    Ok(ColumnStats {
        mean,
        std,
        sum,
        sum_sq,
        weight_total: w_total,
        nonzero_weight_count: nonzero,
    })
}

/// Weighted sample variance with a `Σw − 1` denominator. Kept for
/// comparison with the NIST form; undefined when the weights sum to one.
pub fn becker_ismail_variance(x: &DenseMatrix, weights: &[f64]) -> Result<Vec<f64>> {
    validate_weights(weights, x.rows())?;
    let w_total = neumaier_sum(weights);
    let denom = w_total - 1.0;
    if denom.abs() <= 1e-12 {
        return Err(Error::UndefinedVariance);
    }
    let k = x.cols();
    let mut mean = vec![NeumaierSum::new(); k];
    for (row, &w) in x.row_iter().zip(weights) {
        for (m, &v) in mean.iter_mut().zip(row) {
            m.add(w * v);
        }
    }
    let mean: Vec<f64> = mean.iter().map(|m| m.value() / w_total).collect();
    let mut dev = vec![NeumaierSum::new(); k];
    for (row, &w) in x.row_iter().zip(weights) {
        for ((d, &v), &mu) in dev.iter_mut().zip(row).zip(&mean) {
            d.add(w * (v - mu) * (v - mu));
        }
    }
    Ok(dev.iter().map(|d| d.value() / denom).collect())
}

/// Balanced class weights `w_c = N / (C·N_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightTable {
    pub classes: Vec<usize>,
    pub counts: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ClassWeightTable {
    pub fn weight_of(&self, class: usize) -> Option<f64> {
        self.classes
            .binary_search(&class)
            .ok()
            .map(|i| self.weights[i])
    }

    /// Per-sample weight vector for `labels`.
    pub fn sample_weights(&self, labels: &[usize]) -> Result<Vec<f64>> {
        labels
            .iter()
            .map(|&c| {
                self.weight_of(c)
                    .ok_or_else(|| Error::invalid(format!("class {c} not in weight table")))
            })
            .collect()
    }
}

pub fn class_weights(labels: &[usize]) -> Result<ClassWeightTable> {
    if labels.is_empty() {
        return Err(Error::invalid("class weights need at least one label"));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in labels {
        *counts.entry(c).or_default() += 1;
    }
    let n = labels.len() as f64;
    let c = counts.len() as f64;
    let (classes, counts): (Vec<usize>, Vec<usize>) = counts.into_iter().unzip();
    let weights = counts.iter().map(|&nc| n / (c * nc as f64)).collect();
    Ok(ClassWeightTable {
        classes,
        counts,
        weights,
    })
}
