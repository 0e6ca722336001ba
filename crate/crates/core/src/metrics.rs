//! Prediction metrics and bias/scale calibration of predictions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::NeumaierSum;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction/reference length",
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

pub fn rmse(predictions: &[f64], references: &[f64]) -> Result<f64> {
    check_lengths(predictions, references)?;
    if predictions.is_empty() {
        return Err(Error::invalid("RMSE of an empty vector"));
    }
    let ss: NeumaierSum = predictions
        .iter()
        .zip(references)
        .map(|(p, r)| (p - r) * (p - r))
        .collect();
    Ok((ss.value() / predictions.len() as f64).sqrt())
}

/// Where the predictions used to estimate a calibration line came from.
/// Test-set predictions are never an acceptable source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    Train,
    Validation,
    TrainPlusValidation,
}

impl FromStr for CalibrationSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "validation" => Ok(Self::Validation),
            "train+validation" | "train_plus_validation" => Ok(Self::TrainPlusValidation),
            "test" => Err(Error::TestLeakage),
            other => Err(Error::invalid(format!("unknown calibration source {other:?}"))),
        }
    }
}

impl fmt::Display for CalibrationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Validation => "validation",
            Self::TrainPlusValidation => "train_plus_validation",
        })
    }
}

/// `ŷ ↦ scale·ŷ + bias`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationLine {
    pub scale: f64,
    pub bias: f64,
    pub source: CalibrationSource,
}

impl CalibrationLine {
    pub fn identity(source: CalibrationSource) -> Self {
        Self {
            scale: 1.0,
            bias: 0.0,
            source,
        }
    }

    pub fn apply(&self, predictions: &[f64]) -> Vec<f64> {
        apply_calibration(self, predictions)
    }
}

/// Least-squares line taking predictions onto references: minimises
/// `Σ(scale·ŷᵢ + bias − yᵢ)²`, i.e. references regressed on predictions.
pub fn fit_bias_scale(predictions: &[f64], references: &[f64], source: CalibrationSource) -> Result<CalibrationLine> {
    check_lengths(predictions, references)?;
    let n = predictions.len();
    if n < 3 {
        return Err(Error::invalid(format!("calibration needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mp = predictions.iter().copied().collect::<NeumaierSum>().value() / nf;
    let mr = references.iter().copied().collect::<NeumaierSum>().value() / nf;
    let sxx: NeumaierSum = predictions.iter().map(|p| (p - mp) * (p - mp)).collect();
    let sxy: NeumaierSum = predictions
        .iter()
        .zip(references)
        .map(|(p, r)| (p - mp) * (r - mr))
        .collect();
    let sxx = sxx.value();
    if sxx <= f64::EPSILON * f64::EPSILON * nf * mp.abs().max(1.0).powi(2) {
        return Err(Error::DegenerateFit("predictions are constant; scale is undefined".into()));
    }
    let scale = sxy.value() / sxx;
    Ok(CalibrationLine {
        scale,
        bias: mr - scale * mp,
        source,
    })
}

pub fn apply_calibration(line: &CalibrationLine, predictions: &[f64]) -> Vec<f64> {
    predictions.iter().map(|p| line.scale * p + line.bias).collect()
}

/// Residual standard error after the best bias/scale adjustment, with
/// `n − 2` degrees of freedom.
pub fn syx(predictions: &[f64], references: &[f64]) -> Result<f64> {
    check_lengths(predictions, references)?;
    let n = predictions.len();
    if n <= 2 {
        return Err(Error::invalid(format!("sYX needs more than 2 points, got {n}")));
    }
    let line = fit_bias_scale(predictions, references, CalibrationSource::Train)?;
    let ss: NeumaierSum = predictions
        .iter()
        .zip(references)
        .map(|(p, r)| {
            let e = line.scale * p + line.bias - r;
            e * e
        })
        .collect();
    Ok((ss.value() / (n as f64 - 2.0)).sqrt())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    weighted_accuracy(predicted, truth, None)
}

/// Fraction of correct predictions, each sample counted with its weight.
pub fn weighted_accuracy(predicted: &[usize], truth: &[usize], weights: Option<&[f64]>) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "class vector length",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("accuracy of an empty vector"));
    }
    let mut hit = NeumaierSum::new();
    let mut tot = NeumaierSum::new();
    for (i, (p, t)) in predicted.iter().zip(truth).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        tot.add(w);
        if p == t {
            hit.add(w);
        }
    }
    if tot.value() <= 0.0 {
        return Err(Error::invalid("total weight is zero"));
    }
    Ok(hit.value() / tot.value())
}

/// Mean per-class recall over classes `0..=max(truth)`.
pub fn balanced_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "class vector length",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let Some(&max) = truth.iter().max() else {
        return Err(Error::invalid("balanced accuracy of an empty vector"));
    };
    let mut members = vec![0usize; max + 1];
    let mut correct = vec![0usize; max + 1];
    for (&p, &t) in predicted.iter().zip(truth) {
        members[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    if let Some(class) = members.iter().position(|&c| c == 0) {
        return Err(Error::UndefinedRecall { class });
    }
    let recall_sum: f64 = correct
        .iter()
        .zip(&members)
        .map(|(&c, &n)| c as f64 / n as f64)
        .sum();
    Ok(recall_sum / members.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TR: CalibrationSource = CalibrationSource::Train;

    #[test]
    fn identity_and_shift() {
        let y = [1.0, 2.0, 4.0, 7.0];
        let l = fit_bias_scale(&y, &y, TR).unwrap();
        assert!((l.scale - 1.0).abs() < 1e-15 && l.bias.abs() < 1e-14);
        let shifted: Vec<f64> = y.iter().map(|v| v + 2.0).collect();
        let l = fit_bias_scale(&shifted, &y, TR).unwrap();
        assert!((l.scale - 1.0).abs() < 1e-14 && (l.bias + 2.0).abs() < 1e-13);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_bias_scale(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0], TR),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_bias_scale(&[1.0, 2.0], &[1.0, 2.0], TR).is_err());
        assert!(syx(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn applying_lines() {
        let id = CalibrationLine::identity(TR);
        assert_eq!(apply_calibration(&id, &[1.5, -2.0]), vec![1.5, -2.0]);
        let l = CalibrationLine {
            scale: 1.56,
            bias: -7.22,
            source: TR,
        };
        assert!((apply_calibration(&l, &[10.0])[0] - 8.38).abs() < 1e-12);
    }

    #[test]
    fn test_source_is_refused() {
        assert!(matches!("test".parse::<CalibrationSource>(), Err(Error::TestLeakage)));
        assert_eq!(
            "train+validation".parse::<CalibrationSource>().unwrap(),
            CalibrationSource::TrainPlusValidation
        );
    }

    #[test]
    fn rmse_and_syx() {
        let y = [1.0, 2.0, 3.0, 5.0];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert!(syx(&y, &y).unwrap() < 1e-15);
        let s: Vec<f64> = y.iter().map(|v| v - 0.7).collect();
        assert!((rmse(&s, &y).unwrap() - 0.7).abs() < 1e-15);
        assert!(syx(&s, &y).unwrap() < 1e-14);
    }

    #[test]
    fn classification_metrics() {
        let truth = [0, 0, 0, 0, 1, 1, 1, 1];
        let pred = [0, 0, 0, 1, 1, 1, 1, 0];
        assert_eq!(balanced_accuracy(&pred, &truth).unwrap(), 0.75);
        assert_eq!(balanced_accuracy(&truth, &truth).unwrap(), 1.0);
        let truth: Vec<usize> = (0..10).map(|i| usize::from(i >= 8)).collect();
        assert_eq!(balanced_accuracy(&[0; 10], &truth).unwrap(), 0.5);
        assert!(matches!(
            balanced_accuracy(&[0, 2], &[0, 2]),
            Err(Error::UndefinedRecall { class: 1 })
        ));
        let w = [1.0, 3.0];
        assert_eq!(weighted_accuracy(&[0, 1], &[0, 0], Some(&w)).unwrap(), 0.25);
        assert_eq!(accuracy(&[0, 1], &[0, 0]).unwrap(), 0.5);
    }
}
