//! Dataset container, preprocessing flags and fold partitions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Predictors `x` (N×K), responses `y` (N×M) and optional sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DenseMatrix,
    y: DenseMatrix,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: DenseMatrix, weights: Option<Vec<f64>>) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch {
                what: "row count of y",
                expected: x.rows(),
                found: y.rows(),
            });
        }
        if let Some(w) = &weights {
            validate_weights(w, x.rows())?;
        }
        Ok(Self { x, y, weights })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k(&self) -> usize {
        self.x.cols()
    }

    pub fn m(&self) -> usize {
        self.y.cols()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Sub-dataset made of the given rows.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let weights = self
            .weights
            .as_ref()
            .map(|w| idx.iter().map(|&i| w[i]).collect::<Vec<_>>());
        Self::new(self.x.select_rows(idx)?, self.y.select_rows(idx)?, weights)
    }

    pub fn with_x(&self, x: DenseMatrix) -> Result<Self> {
        Self::new(x, self.y.clone(), self.weights.clone())
    }
}

pub(crate) fn validate_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            what: "weight vector length",
            expected: n,
            found: w.len(),
        });
    }
    if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(format!(
            "weight {i} is {} (weights must be finite and non-negative)",
            w[i]
        )));
    }
    if !w.iter().any(|&v| v > 0.0) {
        return Err(Error::invalid("at least one weight must be positive"));
    }
    Ok(())
}

/// What to do with a zero-variance column when scaling is requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroVariancePolicy {
    #[default]
    Error,
    /// Leave the column unscaled (σ := 1).
    Unit,
}

/// Column-wise centering/scaling of X and Y. All 16 flag combinations are
/// valid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub center_x: bool,
    pub center_y: bool,
    pub scale_x: bool,
    pub scale_y: bool,
    #[serde(default)]
    pub zero_variance: ZeroVariancePolicy,
}

impl PreprocessSpec {
    pub const NONE: PreprocessSpec = PreprocessSpec {
        center_x: false,
        center_y: false,
        scale_x: false,
        scale_y: false,
        zero_variance: ZeroVariancePolicy::Error,
    };

    /// Bit layout: cx=1, cy=2, sx=4, sy=8.
    pub fn from_bits(bits: u8) -> Self {
        Self {
            center_x: bits & 1 != 0,
            center_y: bits & 2 != 0,
            scale_x: bits & 4 != 0,
            scale_y: bits & 8 != 0,
            zero_variance: ZeroVariancePolicy::Error,
        }
    }

    pub fn bits(&self) -> u8 {
        self.center_x as u8
            | (self.center_y as u8) << 1
            | (self.scale_x as u8) << 2
            | (self.scale_y as u8) << 3
    }

    pub fn all() -> impl Iterator<Item = PreprocessSpec> {
        (0u8..16).map(Self::from_bits)
    }

    pub fn with_zero_variance(mut self, policy: ZeroVariancePolicy) -> Self {
        self.zero_variance = policy;
        self
    }

    pub fn unit_for_zero(&self) -> bool {
        self.zero_variance == ZeroVariancePolicy::Unit
    }

    pub fn scales_any(&self) -> bool {
        self.scale_x || self.scale_y
    }
}

impl fmt::Display for PreprocessSpec {
    /// Comma-set over `{cx, cy, sx, sy}`; the empty set prints as `none`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.center_x, "cx"),
            (self.center_y, "cy"),
            (self.scale_x, "sx"),
            (self.scale_y, "sy"),
        ];
        let set: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if set.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&set.join(","))
        }
    }
}

impl FromStr for PreprocessSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = PreprocessSpec::NONE;
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "cx" | "center_x" => spec.center_x = true,
                "cy" | "center_y" => spec.center_y = true,
                "sx" | "scale_x" => spec.scale_x = true,
                "sy" | "scale_y" => spec.scale_y = true,
                "none" => {}
                other => {
                    return Err(Error::invalid(format!(
                        "unknown flag {other:?} (expected cx, cy, sx, sy)"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

/// Assignment of every row to one of `P ≥ 2` folds with dense ids `0..P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    assignment: Vec<usize>,
    n_folds: usize,
}

impl FoldSpec {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let n_folds = assignment.iter().max().map_or(0, |m| m + 1);
        if n_folds < 2 {
            return Err(Error::invalid("at least two folds are required"));
        }
        let mut seen = vec![false; n_folds];
        for &f in &assignment {
            seen[f] = true;
        }
        if let Some(f) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("fold {f} has no rows")));
        }
        Ok(Self {
            assignment,
            n_folds,
        })
    }

    /// Leave-one-out: fold `i` holds row `i`.
    pub fn leave_one_out(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    /// Validation rows of `fold`, ascending.
    pub fn validation_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == fold).collect()
    }

    /// Training rows of `fold` (all rows not in it), ascending.
    pub fn training_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] != fold).collect()
    }

    /// Row indices grouped by fold, each group ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.n_folds];
        for (i, &f) in self.assignment.iter().enumerate() {
            g[f].push(i);
        }
        g
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_folds];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }

    pub(crate) fn check_rows(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::DimensionMismatch {
                what: "fold assignment length",
                expected: n,
                found: self.n(),
            });
        }
        Ok(())
    }
}

/// Seeded (optionally stratified) random partition of `n` rows into `p`
/// folds.
///
/// Rows of each class (ascending class id, ascending row index) are shuffled
/// and then dealt round-robin to the folds, continuing the deal across
/// classes, so fold sizes and per-class fold counts both differ by at most
/// one.
pub fn make_folds(n: usize, p: usize, seed: u64, stratify: Option<&[usize]>) -> Result<FoldSpec> {
    if p < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {p}")));
    }
    if p > n {
        return Err(Error::invalid(format!("cannot split {n} rows into {p} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match stratify {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "label vector length",
                    expected: n,
                    found: labels.len(),
                });
            }
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &c) in labels.iter().enumerate() {
                by_class.entry(c).or_default().push(i);
            }
            let mut order = Vec::with_capacity(n);
            for (_, mut rows) in by_class {
                rows.shuffle(&mut rng);
                order.extend(rows);
            }
            order
        }
    };
    let mut assignment = vec![0; n];
    for (slot, &row) in order.iter().enumerate() {
        assignment[row] = slot % p;
    }
    FoldSpec::new(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_strings() {
        let s: PreprocessSpec = "cx,sy".parse().unwrap();
        assert!(s.center_x && s.scale_y && !s.center_y && !s.scale_x);
        assert_eq!(s.to_string(), "cx,sy");
        assert_eq!("".parse::<PreprocessSpec>().unwrap(), PreprocessSpec::NONE);
        assert!("cz".parse::<PreprocessSpec>().is_err());
        let all: Vec<_> = PreprocessSpec::all().collect();
        assert_eq!(all.len(), 16);
        for s in all {
            assert_eq!(PreprocessSpec::from_bits(s.bits()), s);
            assert_eq!(s.to_string().parse::<PreprocessSpec>().unwrap(), s);
        }
    }

    #[test]
    fn even_split() {
        let f = make_folds(4, 2, 0, None).unwrap();
        assert_eq!(f.fold_sizes(), vec![2, 2]);
    }

    #[test]
    fn remainder_split() {
        let mut sizes = make_folds(5, 2, 0, None).unwrap().fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn stratified_minority_spreads() {
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 8)).collect();
        for seed in 0..20 {
            let f = make_folds(10, 5, seed, Some(&labels)).unwrap();
            assert_eq!(f.fold_sizes(), vec![2; 5]);
            let b_folds: Vec<usize> = (8..10).map(|i| f.fold_of(i)).collect();
            assert_ne!(b_folds[0], b_folds[1]);
        }
    }

    #[test]
    fn fold_errors() {
        assert!(make_folds(3, 4, 0, None).is_err());
        assert!(make_folds(3, 1, 0, None).is_err());
        assert!(FoldSpec::new(vec![0, 0, 2]).is_err());
        assert!(FoldSpec::new(vec![0, 0]).is_err());
    }

    #[test]
    fn dataset_validation() {
        let x = DenseMatrix::zeros(3, 2);
        let y = DenseMatrix::zeros(2, 1);
        assert!(Dataset::new(x.clone(), y, None).is_err());
        let y = DenseMatrix::zeros(3, 1);
        assert!(Dataset::new(x.clone(), y.clone(), Some(vec![0.0; 3])).is_err());
        assert!(Dataset::new(x.clone(), y.clone(), Some(vec![1.0, -1.0, 1.0])).is_err());
        assert!(Dataset::new(x, y, Some(vec![0.0, 0.0, 2.0])).is_ok());
    }
}
