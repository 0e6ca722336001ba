use fastpls::stats::{becker_ismail_variance, class_weights, column_stats, neumaier_sum};
use fastpls::{DenseMatrix, Error};
use proptest::prelude::*;

fn matrix_and_weights() -> impl Strategy<Value = (DenseMatrix, Vec<f64>)> {
    (3usize..30, 1usize..5).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(-100.0f64..100.0, n * k),
            prop::collection::vec(0.05f64..5.0, n),
        )
            .prop_map(move |(v, w)| (DenseMatrix::new(n, k, v).unwrap(), w))
    })
}

proptest! {
    #[test]
    fn weight_scale_invariance((x, w) in matrix_and_weights(), c in 1e-3f64..1e3) {
        let a = column_stats(&x, Some(&w), true).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let b = column_stats(&x, Some(&scaled), true).unwrap();
        for j in 0..x.cols() {
            let tol = 1e-12 * (1.0 + a.mean[j].abs());
            prop_assert!((a.mean[j] - b.mean[j]).abs() <= tol);
            prop_assert!((a.std[j] - b.std[j]).abs() <= 1e-12 * (1.0 + a.std[j]));
        }
    }

    #[test]
    fn nist_equals_becker_ismail_when_weights_sum_to_count((x, w) in matrix_and_weights()) {
        let n = w.len() as f64;
        let total = neumaier_sum(&w);
        let w: Vec<f64> = w.iter().map(|v| v * n / total).collect();
        let nist = column_stats(&x, Some(&w), true).unwrap();
        let bi = becker_ismail_variance(&x, &w).unwrap();
        for j in 0..x.cols() {
            let v = nist.std[j] * nist.std[j];
            prop_assert!((v - bi[j]).abs() <= 1e-12 * bi[j].max(1.0), "{} vs {}", v, bi[j]);
        }
    }

    #[test]
    fn unit_weights_match_unweighted((x, _w) in matrix_and_weights()) {
        let ones = vec![1.0; x.rows()];
        let a = column_stats(&x, None, true).unwrap();
        let b = column_stats(&x, Some(&ones), true).unwrap();
        for j in 0..x.cols() {
            prop_assert!((a.std[j] - b.std[j]).abs() <= 1e-12 * (1.0 + a.std[j]));
        }
    }

    #[test]
    fn class_weight_totals(labels in prop::collection::vec(0usize..6, 1..200)) {
        let t = class_weights(&labels).unwrap();
        let c = t.classes.len() as f64;
        let n = labels.len() as f64;
        for (&w, &count) in t.weights.iter().zip(&t.counts) {
            prop_assert!((w * count as f64 - n / c).abs() <= 1e-12 * n);
        }
        let per_sample = t.sample_weights(&labels).unwrap();
        prop_assert!((neumaier_sum(&per_sample) - n).abs() <= 1e-12 * n);
    }
}

#[test]
fn weights_summing_to_one_leave_becker_ismail_undefined() {
    let x = DenseMatrix::column_vector(&[1.0, 2.0, 4.0, 8.0]).unwrap();
    let w = [0.25; 4];
    assert!(matches!(becker_ismail_variance(&x, &w), Err(Error::UndefinedVariance)));
    // the NIST form stays defined for the same weights
    let s = column_stats(&x, Some(&w), true).unwrap();
    assert!(s.std[0].is_finite() && s.std[0] > 0.0);
}
