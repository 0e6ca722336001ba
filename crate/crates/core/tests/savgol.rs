use fastpls::preprocess::{savgol_apply, savgol_coefficients, EdgePolicy, SavGolSpec};
use fastpls::DenseMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Least-squares polynomial taps from an SVD pseudo-inverse of the
/// Vandermonde matrix.
fn oracle_taps(window: usize, poly: usize, deriv: usize) -> Vec<f64> {
    let h = (window / 2) as f64;
    let v = DMatrix::from_fn(window, poly + 1, |i, p| (i as f64 - h).powi(p as i32));
    let pinv = v.svd(true, true).pseudo_inverse(1e-14).unwrap();
    let fact: f64 = (1..=deriv).map(|f| f as f64).product();
    (0..window).map(|j| pinv[(deriv, j)] * fact).collect()
}

#[test]
fn window_five_quadratic_smoothing_taps() {
    let taps = savgol_coefficients(&SavGolSpec::new(5, 2, 0).unwrap()).unwrap();
    let oracle = oracle_taps(5, 2, 0);
    let classic = [-3.0 / 35.0, 12.0 / 35.0, 17.0 / 35.0, 12.0 / 35.0, -3.0 / 35.0];
    for j in 0..5 {
        assert!((taps[j] - oracle[j]).abs() <= 1e-12);
        assert!((taps[j] - classic[j]).abs() <= 1e-12);
    }
}

#[test]
fn taps_match_oracle_across_settings() {
    for window in [3, 5, 7, 9, 11, 15] {
        for poly in 0..window.min(6) {
            for deriv in 0..=poly {
                let taps = savgol_coefficients(&SavGolSpec::new(window, poly, deriv).unwrap()).unwrap();
                let oracle = oracle_taps(window, poly, deriv);
                let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in taps.iter().zip(&oracle) {
                    assert!((a - b).abs() <= 1e-10 * scale, "w={window} p={poly} d={deriv}: {a} vs {b}");
                }
            }
        }
    }
}

fn poly_eval(c: &[f64], t: f64, deriv: usize) -> f64 {
    // d-th derivative of Σ c_p t^p
    let mut acc = 0.0;
    for (p, &cp) in c.iter().enumerate().skip(deriv) {
        let falling: f64 = (p - deriv + 1..=p).map(|f| f as f64).product();
        acc += cp * falling * t.powi((p - deriv) as i32);
    }
    acc
}

proptest! {
    #[test]
    fn polynomials_are_reproduced_and_differentiated(
        half in 1usize..6,
        poly_frac in 0.0f64..1.0,
        deriv_frac in 0.0f64..1.0,
        coefs in prop::collection::vec(-3.0f64..3.0, 8),
        delta in 0.05f64..2.0,
    ) {
        let window = 2 * half + 1;
        let poly = ((window - 1).min(5) as f64 * poly_frac) as usize;
        let deriv = ((poly + 1) as f64 * deriv_frac) as usize;
        let c = &coefs[..=poly];
        let k = window + 12;
        let mid = (k / 2) as f64;
        let x = DenseMatrix::from_fn(1, k, |_, j| poly_eval(c, (j as f64 - mid) * delta, 0));
        let spec = SavGolSpec::new(window, poly, deriv).unwrap().with_delta(delta).unwrap();
        let out = savgol_apply(&x, &spec, EdgePolicy::Shrink).unwrap();
        let scale = x.max_abs().max(1.0) / delta.powi(deriv as i32);
        for col in 0..out.cols() {
            let j = col + half;
            let expect = poly_eval(c, (j as f64 - mid) * delta, deriv);
            let got = out.get(0, col);
            prop_assert!((got - expect).abs() <= 1e-10 * scale.max(expect.abs()),
                "w={} p={} d={} col={}: {} vs {}", window, poly, deriv, col, got, expect);
        }
        // reflect keeps interior points identical to shrink
        let refl = savgol_apply(&x, &spec, EdgePolicy::Reflect).unwrap();
        prop_assert_eq!(refl.cols(), k);
        for col in 0..out.cols() {
            prop_assert_eq!(refl.get(0, col + half).to_bits(), out.get(0, col).to_bits());
        }
    }
}
