//! Cross-validated component selection.
//!
//! The fast engine fits every fold with Algorithm #2 from the products in
//! [`crate::cvmatrix`]; the naive engine materialises each training
//! partition and refits from scratch. Both select components the same way.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvmatrix::{self, GlobalProducts};
use crate::data::{Dataset, FoldSpec, PreprocessSpec};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics;
use crate::pls::{classes_from_responses, decode_classes, fit_ikpls1, fit_ikpls2, fit_ikpls2_dataset, ClassCoding, PlsModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Accuracy,
    BalancedAccuracy,
    WeightedAccuracy,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Rmse)
    }

    pub fn is_classification(self) -> bool {
        self != Metric::Rmse
    }

    fn better(self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "rmse" => Ok(Metric::Rmse),
            "accuracy" => Ok(Metric::Accuracy),
            "balanced_accuracy" => Ok(Metric::BalancedAccuracy),
            "weighted_accuracy" => Ok(Metric::WeightedAccuracy),
            _ => Err(Error::invalid(format!("unknown metric {s:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rmse => "rmse",
            Metric::Accuracy => "accuracy",
            Metric::BalancedAccuracy => "balanced_accuracy",
            Metric::WeightedAccuracy => "weighted_accuracy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Fast,
    Naive,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Engine::Fast),
            "naive" => Ok(Engine::Naive),
            _ => Err(Error::invalid(format!("unknown engine {s:?}"))),
        }
    }
}

/// Wall-clock seconds per phase. Fold fits run in parallel, so `fit` and
/// `predict` are sums over folds rather than elapsed time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CvTiming {
    pub precompute: f64,
    pub fit: f64,
    pub predict: f64,
    pub total: f64,
}

/// Deterministic part of a cross-validation run. Timings are kept apart in
/// [`CvOutcome::timing`] so that reports compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub flags: String,
    pub a_max: usize,
    pub metric: Metric,
    pub engine: Engine,
    pub n_folds: usize,
    /// `per_fold[p][a − 1]`.
    pub per_fold: Vec<Vec<f64>>,
    pub best_a_per_fold: Vec<usize>,
    pub selected_a: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    pub model: PlsModel,
    pub timing: CvTiming,
}

struct Target {
    labels: Option<(Vec<usize>, ClassCoding)>,
}

impl Target {
    fn new(data: &Dataset, metric: Metric) -> Result<Self> {
        let labels = if metric.is_classification() {
            Some(classes_from_responses(data.y())?)
        } else {
            None
        };
        Ok(Self { labels })
    }

    fn score(&self, metric: Metric, data: &Dataset, rows: &[usize], pred: &DenseMatrix) -> Result<f64> {
        match (&self.labels, metric) {
            (None, _) | (_, Metric::Rmse) => {
                let y = data.y().select_rows(rows)?;
                metrics::rmse(pred.as_slice(), y.as_slice())
            }
            (Some((labels, coding)), m) => {
                let truth: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
                let got = decode_classes(pred, *coding)?;
                match m {
                    Metric::Accuracy => metrics::accuracy(&got, &truth),
                    Metric::BalancedAccuracy => metrics::balanced_accuracy(&got, &truth),
                    _ => {
                        let w: Option<Vec<f64>> = data.weights().map(|w| rows.iter().map(|&i| w[i]).collect());
                        metrics::weighted_accuracy(&got, &truth, w.as_deref())
                    }
                }
            }
        }
    }
}

/// Fits the model for one fold with Algorithm #2 on the training-partition
/// products.
pub fn fit_fold(g: &GlobalProducts<'_>, fold: usize, spec: &PreprocessSpec, a_max: usize) -> Result<PlsModel> {
    let cp = g.training_products(fold, spec)?;
    fit_ikpls2(&cp.xtx_train, &cp.xty_train, &cp.stats_x_train, &cp.stats_y_train, spec, a_max)
}

/// Reference path: materialises the training rows and fits Algorithm #1.
pub fn fit_fold_naive(data: &Dataset, folds: &FoldSpec, fold: usize, spec: &PreprocessSpec, a_max: usize) -> Result<PlsModel> {
    let train = data.select_rows(&folds.training_rows(fold))?;
    fit_ikpls1(&train, spec, a_max)
}

/// Index of the best entry; ties go to the smallest component count.
fn best_index(metric: Metric, scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if metric.better(s, scores[best]) {
            best = i;
        }
    }
    best
}

/// `⌊mean + ½⌋` of the per-fold optima, in exact integer arithmetic.
fn round_half_up_mean(values: &[usize]) -> usize {
    let s: usize = values.iter().sum();
    let p = values.len();
    (2 * s + p) / (2 * p)
}

pub fn cross_validate(
    data: &Dataset,
    folds: &FoldSpec,
    spec: &PreprocessSpec,
    a_max: usize,
    metric: Metric,
) -> Result<CvOutcome> {
    cross_validate_with(data, folds, spec, a_max, metric, Engine::Fast)
}

pub fn cross_validate_with(
    data: &Dataset,
    folds: &FoldSpec,
    spec: &PreprocessSpec,
    a_max: usize,
    metric: Metric,
    engine: Engine,
) -> Result<CvOutcome> {
    let start = Instant::now();
    folds.check_rows(data.n())?;
    if a_max == 0 {
        return Err(Error::invalid("a_max must be at least 1"));
    }
    let target = Target::new(data, metric)?;

    let t0 = Instant::now();
    let global = match engine {
        Engine::Fast => Some(cvmatrix::precompute(data, folds)?),
        Engine::Naive => None,
    };
    let precompute = t0.elapsed().as_secs_f64();

    let per_fold: Vec<(Vec<f64>, Vec<String>, f64, f64)> = (0..folds.n_folds())
        .into_par_iter()
        .map(|p| {
            let t = Instant::now();
            let model = match &global {
                Some(g) => fit_fold(g, p, spec, a_max),
                None => fit_fold_naive(data, folds, p, spec, a_max),
            }
            .map_err(|e| annotate(e, p))?;
            let fit_s = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let rows = folds.validation_rows(p);
            let xv = data.x().select_rows(&rows)?;
            let preds = model.predict_all(&xv)?;
            let scores = preds
                .iter()
                .map(|pr| target.score(metric, data, &rows, pr))
                .collect::<Result<Vec<f64>>>()?;
            let notes = model.notes().iter().map(|n| format!("fold {p}: {n}")).collect();
            Ok((scores, notes, fit_s, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut timing = CvTiming {
        precompute,
        ..CvTiming::default()
    };
    let mut table = Vec::with_capacity(per_fold.len());
    let mut notes = Vec::new();
    for (scores, n, f, pr) in per_fold {
        timing.fit += f;
        timing.predict += pr;
        table.push(scores);
        notes.extend(n);
    }
    let best: Vec<usize> = table.iter().map(|s| best_index(metric, s) + 1).collect();
    let selected_a = round_half_up_mean(&best).clamp(1, a_max);

    let t = Instant::now();
    let model = match engine {
        Engine::Fast => fit_ikpls2_dataset(data, spec, selected_a)?,
        Engine::Naive => fit_ikpls1(data, spec, selected_a)?,
    };
    timing.fit += t.elapsed().as_secs_f64();
    timing.total = start.elapsed().as_secs_f64();

    Ok(CvOutcome {
        report: CvReport {
            flags: spec.to_string(),
            a_max,
            metric,
            engine,
            n_folds: folds.n_folds(),
            per_fold: table,
            best_a_per_fold: best,
            selected_a,
            notes,
        },
        model,
        timing,
    })
}

fn annotate(e: Error, fold: usize) -> Error {
    match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("fold {fold}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_folds;

    #[test]
    fn rounding_of_selected_count() {
        assert_eq!(round_half_up_mean(&[1, 2]), 2);
        assert_eq!(round_half_up_mean(&[1, 1, 2]), 1);
        assert_eq!(round_half_up_mean(&[3, 4, 4, 3]), 4);
        assert_eq!(round_half_up_mean(&[5]), 5);
    }

    #[test]
    fn ties_pick_fewest_components() {
        assert_eq!(best_index(Metric::Rmse, &[0.5, 0.3, 0.3]), 1);
        assert_eq!(best_index(Metric::Accuracy, &[0.9, 0.9, 0.8]), 0);
    }

    #[test]
    fn fast_and_naive_agree() {
        let x = DenseMatrix::from_fn(30, 5, |i, j| (((i * 13 + j * 7) % 17) as f64 - 8.0) * 0.25 + (i as f64 * 0.1).sin());
        let y = DenseMatrix::from_fn(30, 1, |i, _| x.get(i, 0) - 2.0 * x.get(i, 3) + 0.05 * (i % 3) as f64);
        let d = Dataset::new(x, y, None).unwrap();
        let folds = make_folds(30, 5, 7, None).unwrap();
        let spec: PreprocessSpec = "cx,cy,sx".parse().unwrap();
        let fast = cross_validate(&d, &folds, &spec, 4, Metric::Rmse).unwrap();
        let naive = cross_validate_with(&d, &folds, &spec, 4, Metric::Rmse, Engine::Naive).unwrap();
        assert_eq!(fast.report.best_a_per_fold, naive.report.best_a_per_fold);
        assert_eq!(fast.report.selected_a, naive.report.selected_a);
        for (a, b) in fast.report.per_fold.iter().flatten().zip(naive.report.per_fold.iter().flatten()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}
