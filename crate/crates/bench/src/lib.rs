//! Shared fixtures for the benchmarks.

use fastpls::{make_folds, synthetic, Dataset, FoldSpec};

/// Seeded regression data with unit noise.
pub fn data(n: usize, k: usize, m: usize) -> Dataset {
    synthetic::regression(n, k, m, 1.0, 7).expect("valid shape")
}

pub fn folds(n: usize, p: usize) -> FoldSpec {
    make_folds(n, p, 7, None).expect("valid fold count")
}
