use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fastpls::{io, synthetic, DenseMatrix};
use serde_json::Value;

fn fastpls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastpls"))
        .args(args)
        .env_remove("FASTPLS_THREADS")
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    x: PathBuf,
    y: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let d = synthetic::regression(60, 6, 2, 0.3, 5).unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    io::save_csv(&x, d.x(), None).unwrap();
    io::save_csv(&y, d.y(), None).unwrap();
    Fixture { dir, x, y }
}

#[test]
fn fit_then_predict_round_trip() {
    let f = fixture();
    let out = f.dir.path().join("fit");
    let r = fastpls(&["fit", "--x", p(&f.x), "--y", p(&f.y), "--amax", "4", "--flags", "cx,cy", "--out-dir", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let pred = f.dir.path().join("pred");
    let model = out.join("model.fplm");
    let r = fastpls(&["predict", "--model", p(&model), "--x", p(&f.x), "--a", "4", "--out-dir", p(&pred)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = io::load_csv(pred.join("predictions.csv"), true).unwrap();
    assert_eq!((csv.matrix.rows(), csv.matrix.cols()), (60, 2));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(pred.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "predict");
}

#[test]
fn predict_with_wrong_column_count_is_a_data_error() {
    let f = fixture();
    let out = f.dir.path().join("fit");
    assert!(fastpls(&["fit", "--x", p(&f.x), "--y", p(&f.y), "--amax", "2", "--out-dir", p(&out)]).status.success());
    let narrow = f.dir.path().join("narrow.csv");
    io::save_csv(&narrow, &DenseMatrix::zeros(3, 5), None).unwrap();
    let r = fastpls(&["predict", "--model", p(&out.join("model.fplm")), "--x", p(&narrow), "--out-dir", p(&f.dir.path().join("p"))]);
    assert_eq!(r.status.code(), Some(3));
    assert_eq!(error_json(&r)["error"]["category"], "data");
}

#[test]
fn usage_errors_exit_with_two() {
    let f = fixture();
    let out = f.dir.path().join("o");
    let r = fastpls(&["fit", "--x", p(&f.x), "--y", p(&f.y), "--amax", "2", "--flags", "cz", "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = fastpls(&["fit", "--x", p(&f.x), "--y", p(&f.y), "--amax", "0", "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = fastpls(&["cv", "--x", p(&f.x), "--y", p(&f.y)]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_json(&r)["error"]["category"], "usage");
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let r = fastpls(&["fit", "--x", p(&missing), "--y", p(&missing), "--amax", "1", "--out-dir", p(dir.path())]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn calibration_refuses_test_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.csv");
    let refs = dir.path().join("ref.csv");
    io::save_csv(&pred, &DenseMatrix::column_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap(), None).unwrap();
    io::save_csv(&refs, &DenseMatrix::column_vector(&[1.1, 2.3, 2.9, 4.2]).unwrap(), None).unwrap();
    let out = dir.path().join("cal");
    let r = fastpls(&["calibrate", "--pred", p(&pred), "--reference", p(&refs), "--source", "test", "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_json(&r)["error"]["kind"], "test_leakage");
    assert!(!out.join("calibration.json").exists());

    let r = fastpls(&["calibrate", "--pred", p(&pred), "--reference", p(&refs), "--source", "validation", "--apply", p(&pred), "--out-dir", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(report["source"], "validation");
    assert!(out.join("calibrated.csv").exists());
}

#[test]
fn cv_report_and_model_do_not_depend_on_threads() {
    let f = fixture();
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = f.dir.path().join(format!("cv{threads}"));
        let r = fastpls(&[
            "--threads", threads, "cv", "--x", p(&f.x), "--y", p(&f.y), "--folds", "5", "--amax", "4",
            "--flags", "cx,cy,sx", "--seed", "9", "--out-dir", p(&out),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        runs.push((fs::read(out.join("cv_report.json")).unwrap(), fs::read(out.join("model.fplm")).unwrap()));
    }
    assert!(runs[0] == runs[1]);
    let report: Value = serde_json::from_slice(&runs[0].0).unwrap();
    assert_eq!(report["n_folds"], 5);
}

#[test]
fn cvmatrix_modes_write_the_same_shapes() {
    let f = fixture();
    for mode in ["retained", "streaming"] {
        let out = f.dir.path().join(mode);
        let r = fastpls(&[
            "cvmatrix", "--x", p(&f.x), "--y", p(&f.y), "--folds", "3", "--flags", "cx,sx", "--mode", mode,
            "--out-dir", p(&out),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        for fold in 0..3 {
            let m = DenseMatrix::load_binary(out.join(format!("fold_{fold:04}_xtx.fpls"))).unwrap();
            assert_eq!((m.rows(), m.cols()), (6, 6));
        }
    }
}
