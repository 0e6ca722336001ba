use std::path::Path;
use std::time::Instant;

use fastpls::crossval::{cross_validate_with, Engine, Metric};
use fastpls::io::{load_csv, write_csv};
use fastpls::metrics::{apply_calibration, fit_bias_scale, rmse, syx};
use fastpls::{
    class_weights, classes_from_responses, column_stats, fit_ikpls1, fit_ikpls2_dataset, fit_nipals, make_folds,
    precompute, recomputed_training_products, stream, synthetic, CalibrationSource, CvProducts, Dataset,
    DenseMatrix, Error, FoldSpec, Pipeline, PlsModel, PreprocessSpec, Result, ZeroVariancePolicy,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{
    Algorithm, BenchArgs, CalibrateArgs, CvArgs, CvMatrixArgs, DataArgs, FitArgs, PredictArgs, ProductMode,
    StatsArgs, WeightSource, ZeroVariance,
};
use crate::output::{with_header, Artifacts};

/// Data loaded and resolved from the shared input options.
struct Loaded {
    data: Dataset,
    /// Row steps plus the resolved column flags.
    pipeline: Pipeline,
    spec: PreprocessSpec,
    labels: Option<Vec<usize>>,
}

fn load_matrix(path: &Path, header: bool) -> Result<DenseMatrix> {
    Ok(load_csv(path, header)?.matrix)
}

fn load_column(path: &Path, header: bool, what: &'static str) -> Result<Vec<f64>> {
    let m = load_matrix(path, header)?;
    if m.cols() != 1 {
        return Err(Error::DimensionMismatch {
            what,
            expected: 1,
            found: m.cols(),
        });
    }
    Ok(m.into_vec())
}

/// Class labels encoded in Y: one-hot rows, a two-valued column, or a
/// single column of non-negative integers.
fn labels_from_y(y: &DenseMatrix) -> Result<Vec<usize>> {
    if let Ok((labels, _)) = classes_from_responses(y) {
        return Ok(labels);
    }
    if y.cols() == 1 && y.as_slice().iter().all(|&v| v >= 0.0 && v.fract() == 0.0 && v < 1e9) {
        return Ok(y.as_slice().iter().map(|&v| v as usize).collect());
    }
    Err(Error::invalid("Y does not hold class labels"))
}

fn resolve_weights(
    source: WeightSource,
    file: Option<&Path>,
    header: bool,
    n: usize,
    y: Option<&DenseMatrix>,
) -> Result<Option<Vec<f64>>> {
    match source {
        WeightSource::None => Ok(None),
        WeightSource::Column => {
            let path = file.ok_or_else(|| Error::invalid("--weights column needs --weights-file"))?;
            let w = load_column(path, header, "weights file columns")?;
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "weight count",
                    expected: n,
                    found: w.len(),
                });
            }
            Ok(Some(w))
        }
        WeightSource::BalancedClasses => {
            let y = y.ok_or_else(|| Error::invalid("--weights balanced-classes needs class responses"))?;
            let labels = labels_from_y(y)?;
            Ok(Some(class_weights(&labels)?.sample_weights(&labels)?))
        }
    }
}

fn load_data(args: &DataArgs) -> Result<Loaded> {
    let mut pipeline: Pipeline = args.pipeline.parse()?;
    let flags: PreprocessSpec = args.flags.parse()?;
    let x = load_matrix(&args.x, args.header)?;
    let y = load_matrix(&args.y, args.header)?;
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            what: "row count of Y",
            expected: x.rows(),
            found: y.rows(),
        });
    }
    let x = pipeline.apply_rows(&x)?;
    let policy = match args.zero_variance {
        ZeroVariance::Error => ZeroVariancePolicy::Error,
        ZeroVariance::Unit => ZeroVariancePolicy::Unit,
    };
    let spec = PreprocessSpec::from_bits(flags.bits() | pipeline.flags.bits()).with_zero_variance(policy);
    pipeline.flags = spec;
    let weights = resolve_weights(args.weights, args.weights_file.as_deref(), args.header, x.rows(), Some(&y))?;
    let labels = labels_from_y(&y).ok();
    Ok(Loaded {
        data: Dataset::new(x, y, weights)?,
        pipeline,
        spec,
        labels,
    })
}

fn data_config(args: &DataArgs, loaded: &Loaded) -> Value {
    json!({
        "x": args.x,
        "y": args.y,
        "header": args.header,
        "weights": format!("{:?}", args.weights),
        "weights_file": args.weights_file,
        "flags": loaded.spec.to_string(),
        "pipeline": loaded.pipeline.to_string(),
        "zero_variance": format!("{:?}", args.zero_variance),
        "n": loaded.data.n(),
        "k": loaded.data.k(),
        "m": loaded.data.m(),
    })
}

fn parse_folds(text: &str, n: usize, seed: u64, stratify: Option<&[usize]>) -> Result<FoldSpec> {
    if text == "loo" {
        return FoldSpec::leave_one_out(n);
    }
    let p: usize = text
        .parse()
        .map_err(|_| Error::invalid(format!("--folds must be a count or \"loo\", got {text:?}")))?;
    make_folds(n, p, seed, stratify)
}

fn csv_bytes(m: &DenseMatrix, header: Option<&[String]>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, m, header)?;
    Ok(buf)
}

fn training_rmse(model: &PlsModel, data: &Dataset) -> Result<Vec<f64>> {
    model
        .predict_all(data.x())?
        .iter()
        .map(|p| rmse(p.as_slice(), data.y().as_slice()))
        .collect()
}

pub fn fit(args: &FitArgs, threads: usize) -> Result<()> {
    let loaded = load_data(&args.data)?;
    let d = &loaded.data;
    let model = match args.algorithm {
        Algorithm::Ikpls1 => fit_ikpls1(d, &loaded.spec, args.amax)?,
        Algorithm::Ikpls2 => fit_ikpls2_dataset(d, &loaded.spec, args.amax)?,
        Algorithm::Nipals => fit_nipals(d, &loaded.spec, args.amax)?,
    }
    .with_pipeline(loaded.pipeline.to_string());

    #[derive(Serialize)]
    struct FitReport<'a> {
        algorithm: String,
        flags: String,
        pipeline: String,
        a_max: usize,
        components: usize,
        n: usize,
        k: usize,
        m: usize,
        weighted: bool,
        model_format_version: u8,
        training_rmse: Vec<f64>,
        notes: &'a [String],
    }
    let report = FitReport {
        algorithm: format!("{:?}", args.algorithm).to_lowercase(),
        flags: loaded.spec.to_string(),
        pipeline: loaded.pipeline.to_string(),
        a_max: model.a_max(),
        components: model.components(),
        n: d.n(),
        k: d.k(),
        m: d.m(),
        weighted: d.weights().is_some(),
        model_format_version: fastpls::pls::MODEL_FORMAT_VERSION,
        training_rmse: training_rmse(&model, d)?,
        notes: model.notes(),
    };

    let mut out = Artifacts::new(&args.out_dir)?;
    out.write_bytes("model.fplm", "FPLM/v1", &model.to_bytes())?;
    out.write_json("fit_report.json", &with_header("fit", &report))?;
    let mut config = data_config(&args.data, &loaded);
    config["amax"] = json!(args.amax);
    config["algorithm"] = json!(report.algorithm);
    out.finish("fit", config, threads)
}

pub fn predict(args: &PredictArgs, threads: usize) -> Result<()> {
    let model = PlsModel::load(&args.model)?;
    let pipeline: Pipeline = model.pipeline().parse()?;
    let x = pipeline.apply_rows(&load_matrix(&args.x, args.header)?)?;
    let a = args.a.unwrap_or(model.a_max());
    let mut out = Artifacts::new(&args.out_dir)?;
    if args.classes {
        let labels = model.predict_class(&x, a)?;
        let col = DenseMatrix::from_fn(labels.len(), 1, |i, _| labels[i] as f64);
        out.write_bytes("predictions.csv", "csv", &csv_bytes(&col, Some(&["class".to_string()]))?)?;
    } else {
        let pred = model.predict(&x, a)?;
        let names: Vec<String> = (0..pred.cols()).map(|j| format!("y{j}")).collect();
        out.write_bytes("predictions.csv", "csv", &csv_bytes(&pred, Some(&names))?)?;
    }
    let config = json!({
        "model": args.model,
        "x": args.x,
        "header": args.header,
        "a": a,
        "classes": args.classes,
        "pipeline": model.pipeline(),
    });
    out.finish("predict", config, threads)
}

pub fn cv(args: &CvArgs, threads: usize) -> Result<()> {
    let metric: Metric = args.metric.parse()?;
    let engine: Engine = args.engine.parse()?;
    let loaded = load_data(&args.data)?;
    let d = &loaded.data;
    let strata = if args.stratify {
        Some(
            loaded
                .labels
                .as_deref()
                .ok_or_else(|| Error::invalid("--stratify needs class responses"))?,
        )
    } else {
        None
    };
    let folds = parse_folds(&args.folds, d.n(), args.seed, strata)?;
    let outcome = cross_validate_with(d, &folds, &loaded.spec, args.amax, metric, engine)?;
    let model = outcome.model.with_pipeline(loaded.pipeline.to_string());

    let mut report = with_header("cv", &outcome.report);
    report["pipeline"] = json!(loaded.pipeline.to_string());
    report["seed"] = json!(args.seed);
    report["fold_assignment"] = json!(folds.assignment());
    report["final_model"] = json!({
        "components": model.components(),
        "a_max": model.a_max(),
        "format_version": fastpls::pls::MODEL_FORMAT_VERSION,
        "notes": model.notes(),
    });

    let mut out = Artifacts::new(&args.out_dir)?;
    out.write_json("cv_report.json", &report)?;
    out.write_bytes("model.fplm", "FPLM/v1", &model.to_bytes())?;
    out.write_json("timing.json", &with_header("timing", &outcome.timing))?;
    let mut config = data_config(&args.data, &loaded);
    config["folds"] = json!(args.folds);
    config["amax"] = json!(args.amax);
    config["metric"] = json!(metric.to_string());
    config["seed"] = json!(args.seed);
    config["stratify"] = json!(args.stratify);
    config["engine"] = json!(args.engine);
    out.finish("cv", config, threads)
}

pub fn cvmatrix(args: &CvMatrixArgs, threads: usize) -> Result<()> {
    let loaded = load_data(&args.data)?;
    let d = &loaded.data;
    let folds = parse_folds(&args.folds, d.n(), args.seed, None)?;
    let mut out = Artifacts::new(&args.out_dir)?;
    let mut entries = Vec::with_capacity(folds.n_folds());
    let sizes = folds.fold_sizes();
    let mut emit = |out: &mut Artifacts, cp: CvProducts| -> Result<()> {
        let p = cp.fold;
        let xtx_name = format!("fold_{p:04}_xtx.fpls");
        let xty_name = format!("fold_{p:04}_xty.fpls");
        let xtx_sum = out.write_bytes(&xtx_name, "FPLS/v1", &cp.xtx_train.to_bytes())?;
        let xty_sum = out.write_bytes(&xty_name, "FPLS/v1", &cp.xty_train.to_bytes())?;
        entries.push(json!({
            "fold": p,
            "flags": loaded.spec.to_string(),
            "n_train": d.n() - sizes[p],
            "k": d.k(),
            "m": d.m(),
            "xtx": { "file": xtx_name, "rows": d.k(), "cols": d.k(), "sha256": xtx_sum },
            "xty": { "file": xty_name, "rows": d.k(), "cols": d.m(), "sha256": xty_sum },
            "mean_x": cp.stats_x_train.mean,
            "std_x": cp.stats_x_train.std,
            "mean_y": cp.stats_y_train.mean,
            "std_y": cp.stats_y_train.std,
        }));
        Ok(())
    };
    match args.mode {
        ProductMode::Retained => {
            let g = precompute(d, &folds)?;
            for p in 0..folds.n_folds() {
                emit(&mut out, g.training_products(p, &loaded.spec)?)?;
            }
        }
        ProductMode::Streaming => {
            for cp in stream(d, &folds, &loaded.spec)? {
                emit(&mut out, cp?)?;
            }
        }
    }
    let mut report = with_header("cvmatrix", &json!({}));
    report["flags"] = json!(loaded.spec.to_string());
    report["n_folds"] = json!(folds.n_folds());
    report["matrix_format_version"] = json!(fastpls::matrix::MATRIX_FORMAT_VERSION);
    report["folds"] = json!(entries);
    out.write_json("cvmatrix.json", &report)?;
    let mut config = data_config(&args.data, &loaded);
    config["folds"] = json!(args.folds);
    config["seed"] = json!(args.seed);
    config["mode"] = json!(format!("{:?}", args.mode).to_lowercase());
    out.finish("cvmatrix", config, threads)
}

/// Minimum wall time over `repeats` runs of `f`.
fn time_min(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn bench(args: &BenchArgs, threads: usize) -> Result<()> {
    if args.p.is_empty() {
        return Err(Error::invalid("--p needs at least one fold count"));
    }
    let spec: PreprocessSpec = args.flags.parse()?;
    let d = synthetic::regression(args.n, args.k, args.m, 1.0, args.seed)?;
    let mut points = Vec::new();
    for &p in &args.p {
        let folds = make_folds(args.n, p, args.seed, None)?;
        let fast = time_min(args.repeats, || {
            let g = precompute(&d, &folds)?;
            for f in 0..p {
                std::hint::black_box(g.training_products(f, &spec)?);
            }
            Ok(())
        })?;
        let naive = time_min(args.repeats, || {
            for f in 0..p {
                std::hint::black_box(recomputed_training_products(&d, &folds, f, &spec)?);
            }
            Ok(())
        })?;
        points.push(json!({
            "p": p,
            "fast_seconds": fast,
            "naive_seconds": naive,
            "speedup": naive / fast,
        }));
    }
    let first = &points[0];
    let last = &points[points.len() - 1];
    let growth = |key: &str| last[key].as_f64().unwrap() / first[key].as_f64().unwrap();
    let mut report = with_header("bench", &json!({}));
    report["n"] = json!(args.n);
    report["k"] = json!(args.k);
    report["m"] = json!(args.m);
    report["flags"] = json!(spec.to_string());
    report["threads"] = json!(threads);
    report["points"] = json!(points);
    report["fast_growth"] = json!(growth("fast_seconds"));
    report["naive_growth"] = json!(growth("naive_seconds"));
    let mut out = Artifacts::new(&args.out_dir)?;
    out.write_json("bench.json", &report)?;
    let config = json!({
        "n": args.n, "k": args.k, "m": args.m, "p": args.p,
        "flags": spec.to_string(), "seed": args.seed, "repeats": args.repeats,
    });
    out.finish("bench", config, threads)
}

pub fn stats(args: &StatsArgs, threads: usize) -> Result<()> {
    let x = load_matrix(&args.x, args.header)?;
    let y = args.y.as_deref().map(|p| load_matrix(p, args.header)).transpose()?;
    let w = resolve_weights(args.weights, args.weights_file.as_deref(), args.header, x.rows(), y.as_ref())?;
    let s = column_stats(&x, w.as_deref(), true)?;
    let mut out = Artifacts::new(&args.out_dir)?;
    out.write_json("stats.json", &with_header("stats", &s))?;
    let config = json!({
        "x": args.x, "y": args.y, "header": args.header,
        "weights": format!("{:?}", args.weights), "weights_file": args.weights_file,
    });
    out.finish("stats", config, threads)
}

pub fn calibrate(args: &CalibrateArgs, threads: usize) -> Result<()> {
    let source: CalibrationSource = args.source.parse()?;
    let pred = load_column(&args.pred, args.header, "prediction columns")?;
    let refs = load_column(&args.reference, args.header, "reference columns")?;
    let line = fit_bias_scale(&pred, &refs, source)?;
    let corrected = apply_calibration(&line, &pred);
    let report = json!({
        "scale": line.scale,
        "bias": line.bias,
        "source": line.source,
        "n": pred.len(),
        "rmse_before": rmse(&pred, &refs)?,
        "rmse_after": rmse(&corrected, &refs)?,
        "syx": syx(&pred, &refs)?,
    });
    let mut out = Artifacts::new(&args.out_dir)?;
    out.write_json("calibration.json", &with_header("calibration", &report))?;
    if let Some(path) = &args.apply {
        let new = load_column(path, args.header, "prediction columns")?;
        let fixed = apply_calibration(&line, &new);
        let m = DenseMatrix::column_vector(&fixed)?;
        out.write_bytes("calibrated.csv", "csv", &csv_bytes(&m, Some(&["y0".to_string()]))?)?;
    }
    let config = json!({
        "pred": args.pred, "reference": args.reference, "header": args.header,
        "source": source.to_string(), "apply": args.apply,
    });
    out.finish("calibrate", config, threads)
}
