#![allow(dead_code)]

use fastpls::{synthetic, Dataset, DenseMatrix, PlsModel};
use nalgebra::DMatrix;

pub fn regression(n: usize, k: usize, m: usize, weighted: bool, seed: u64) -> Dataset {
    let d = synthetic::regression(n, k, m, 0.5, seed).unwrap();
    if weighted {
        let w = synthetic::weights(n, seed ^ 0x5eed);
        Dataset::new(d.x().clone(), d.y().clone(), Some(w)).unwrap()
    } else {
        d
    }
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn max_b_diff(a: &PlsModel, b: &PlsModel) -> f64 {
    a.b_stack()
        .iter()
        .zip(b.b_stack())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE);
    a.max_abs_diff(b) / scale
}
