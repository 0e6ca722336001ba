use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fastpls::{
    cross_validate, fit_ikpls1, fit_ikpls2_dataset, fit_nipals, precompute, recomputed_training_products, stream,
    Metric, PreprocessSpec,
};
use fastpls_bench::{data, folds};

fn fitting(c: &mut Criterion) {
    let spec: PreprocessSpec = "cx,cy,sx,sy".parse().unwrap();
    let mut group = c.benchmark_group("fit");
    for (n, k) in [(1000, 50), (5000, 100), (500, 500)] {
        let d = data(n, k, 1);
        let id = format!("{n}x{k}");
        group.bench_with_input(BenchmarkId::new("ikpls1", &id), &d, |b, d| {
            b.iter(|| black_box(fit_ikpls1(d, &spec, 20).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("ikpls2", &id), &d, |b, d| {
            b.iter(|| black_box(fit_ikpls2_dataset(d, &spec, 20).unwrap()))
        });
        if n * k <= 100_000 {
            group.bench_with_input(BenchmarkId::new("nipals", &id), &d, |b, d| {
                b.iter(|| black_box(fit_nipals(d, &spec, 20).unwrap()))
            });
        }
    }
    group.finish();
}

fn fold_products(c: &mut Criterion) {
    let spec: PreprocessSpec = "cx,cy,sx,sy".parse().unwrap();
    let d = data(5000, 100, 1);
    let mut group = c.benchmark_group("fold_products");
    group.sample_size(10);
    for p in [2, 10, 100] {
        let f = folds(d.n(), p);
        group.bench_with_input(BenchmarkId::new("retained", p), &f, |b, f| {
            b.iter(|| {
                let g = precompute(&d, f).unwrap();
                for i in 0..p {
                    black_box(g.training_products(i, &spec).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("streaming", p), &f, |b, f| {
            b.iter(|| {
                for cp in stream(&d, f, &spec).unwrap() {
                    black_box(cp.unwrap());
                }
            })
        });
        if p <= 10 {
            group.bench_with_input(BenchmarkId::new("recomputed", p), &f, |b, f| {
                b.iter(|| {
                    for i in 0..p {
                        black_box(recomputed_training_products(&d, f, i, &spec).unwrap());
                    }
                })
            });
        }
    }
    group.finish();
}

fn full_cv(c: &mut Criterion) {
    let spec: PreprocessSpec = "cx,cy,sx".parse().unwrap();
    let d = data(2000, 60, 2);
    let f = folds(d.n(), 10);
    let mut group = c.benchmark_group("cross_validate");
    group.sample_size(10);
    group.bench_function("2000x60_p10_a15", |b| {
        b.iter(|| black_box(cross_validate(&d, &f, &spec, 15, Metric::Rmse).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, fitting, fold_products, full_cv);
criterion_main!(benches);
