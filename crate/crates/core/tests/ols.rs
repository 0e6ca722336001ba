mod common;

use fastpls::{fit_ikpls1, fit_ikpls2_dataset, fit_nipals, PreprocessSpec};

#[test]
fn full_rank_fit_reproduces_least_squares() {
    for (n, k, m, weighted, seed) in [(40, 6, 1, false, 1), (60, 10, 3, false, 2), (50, 8, 2, true, 3)] {
        let d = common::regression(n, k, m, weighted, seed);
        let x = common::to_na(d.x());
        let y = common::to_na(d.y());
        let w = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            (0..n).map(|i| d.weight(i)).collect(),
        ));
        let xtwx = x.transpose() * &w * &x;
        let b_ols = xtwx.lu().solve(&(x.transpose() * &w * &y)).unwrap();
        for model in [
            fit_ikpls1(&d, &PreprocessSpec::NONE, k).unwrap(),
            fit_ikpls2_dataset(&d, &PreprocessSpec::NONE, k).unwrap(),
            fit_nipals(&d, &PreprocessSpec::NONE, k).unwrap(),
        ] {
            let b = common::to_na(model.coefficients(k).unwrap());
            let err = (&b - &b_ols).abs().max();
            assert!(err <= 1e-7, "n={n} k={k} m={m}: {err:.3e}");
        }
    }
}

#[test]
fn centered_full_rank_fit_matches_intercept_regression() {
    let d = common::regression(80, 7, 2, false, 9);
    let spec: PreprocessSpec = "cx,cy".parse().unwrap();
    let model = fit_ikpls1(&d, &spec, 7).unwrap();
    // least squares with an explicit intercept column
    let x = common::to_na(d.x()).insert_column(0, 1.0);
    let y = common::to_na(d.y());
    let coef = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
    let pred_ols = &x * &coef;
    let pred = common::to_na(&model.predict(d.x(), 7).unwrap());
    assert!((pred - pred_ols).abs().max() <= 1e-7);
}
