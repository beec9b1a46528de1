mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use poddlrom::cli::commands::{
    cmd_eval, cmd_generate, cmd_pod, cmd_run, cmd_train, Split, BASIS_FILE, EVAL_FILE, LOG_FILE, MODEL_FILE,
    SPECTRUM_FILE, TEST_FILE, TRAIN_FILE,
};
use poddlrom::cli::config::RunConfig;
use poddlrom::cli::dataset_file::{decode_dataset, encode_dataset, read_dataset, write_dataset};
use poddlrom::cli::model_file::{decode_model, encode_model, read_basis, read_model};
use poddlrom::cli::sweep::{cmd_sweep, summarize, SweepKind};
use poddlrom::linalg::{random_orthonormal, DenseMatrix};
use poddlrom::solvers::{build_dataset, ParamPoint, ProblemSpec, SnapshotSet};
use tempfile::tempdir;

/// Small heat configuration that trains in well under a second.
fn tiny(overrides: &[&str]) -> RunConfig {
    let mut all: Vec<String> = [
        "problem.n_h=24",
        "problem.time_steps=100",
        "data.n_s=6",
        "data.n_t=5",
        "data.test_n_s=4",
        "data.test_n_t=5",
        "pod.n=4",
        "train.max_epochs=30",
        "train.batch=8",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    all.extend(overrides.iter().map(|s| s.to_string()));
    RunConfig::from_toml_with_overrides("", &all).unwrap()
}

#[test]
fn reference_heat_dataset_has_exact_byte_length() {
    let set = build_dataset(&ProblemSpec::heat1d(), 50, 20, 0).unwrap();
    let bytes = encode_dataset(&set, Vec::new()).unwrap();
    assert_eq!(bytes.len(), 8 + 16 + 8 + 50 * 8 + 20 * 8 + 100 * 1000 * 8);
    let back = decode_dataset(bytes.as_slice()).unwrap();
    assert_eq!(back, set);
    assert_eq!(encode_dataset(&back, Vec::new()).unwrap(), bytes);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempdir().unwrap();
    let cfg = tiny(&[]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let s = cmd_generate(&cfg, Split::Train, &a).unwrap();
    assert_eq!((s.n_h, s.n_data), (24, 30));
    assert!(s.min_norm > 0.0 && s.min_norm <= s.max_norm);
    cmd_generate(&cfg, Split::Train, &b).unwrap();
    assert_eq!(fs::read(a.join(TRAIN_FILE)).unwrap(), fs::read(b.join(TRAIN_FILE)).unwrap());
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn csv_header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn pod_writes_spectrum_and_clamps() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let cfg = tiny(&["pod.n=20"]);
    cmd_generate(&cfg, Split::Train, out).unwrap();
    let s = cmd_pod(&cfg, &out.join(TRAIN_FILE), None, out).unwrap();
    assert_eq!(s.basis.n, 20);
    assert_eq!(csv_header(&out.join(SPECTRUM_FILE)), ["k", "sigma2", "cumulative_tail"]);
    assert!(csv_rows(&out.join(SPECTRUM_FILE)).len() >= 20);
    assert_eq!(read_basis(&out.join(BASIS_FILE)).unwrap(), s.basis);

    let clamped = cmd_pod(&tiny(&["pod.n=500"]), &out.join(TRAIN_FILE), None, out).unwrap();
    assert_eq!(clamped.requested, 500);
    assert_eq!(clamped.basis.n, 24);
}

#[test]
fn eps_mode_selects_five_on_a_geometric_spectrum() {
    // columns q_k s_k e_k give sigma2_k = s_k^2 / N_data = 4^{-k}
    let n = 20;
    let q = random_orthonormal(n, n, 4).unwrap();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let s = (n as f64 * 4f64.powi(-(k as i32 + 1))).sqrt();
            q.column(k).iter().map(|x| x * s).collect()
        })
        .collect();
    let u = DenseMatrix::from_columns(&cols).unwrap();
    let points = (0..n).map(|j| ParamPoint { mu: vec![j as f64], t: 0.0 }).collect();
    let set = SnapshotSet::new(u, points, n, 1, 1.0).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("geo.podrom");
    write_dataset(&path, &set).unwrap();
    let cfg = RunConfig::from_toml_with_overrides("", &["pod.eps=0.1".into()]).unwrap();
    let s = cmd_pod(&cfg, &path, Some(1.0), dir.path()).unwrap();
    assert_eq!(s.basis.n, 5);
}

#[test]
fn train_eval_and_model_round_trip() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let cfg = tiny(&[]);
    let row = cmd_run(&cfg, out).unwrap();
    assert!(row.sandwich_holds(), "{row:?}");
    assert_eq!(csv_header(&out.join(LOG_FILE)), ["epoch", "train_loss", "val_loss", "lr"]);
    assert_eq!(
        csv_header(&out.join(EVAL_FILE)),
        ["N", "n", "active_weights", "E_R", "E_S", "E_POD", "E_NN", "tilde_E_POD", "lower", "upper", "m", "M", "seeds"]
    );

    let mf = read_model(&out.join(MODEL_FILE)).unwrap();
    let bytes = encode_model(&mf, Vec::new()).unwrap();
    assert_eq!(bytes, fs::read(out.join(MODEL_FILE)).unwrap());
    let back = decode_model(bytes.as_slice()).unwrap();
    let test = read_dataset(&out.join(TEST_FILE)).unwrap();
    let a = mf.model.predict_batch(&test.points).unwrap();
    let b = back.model.predict_batch(&test.points).unwrap();
    assert_eq!(a.data(), b.data());
    assert_eq!(back.train, cfg.train);

    // retraining with the same inputs reproduces the log
    let log_a = fs::read(out.join(LOG_FILE)).unwrap();
    let again = out.join("again");
    cmd_train(&cfg, &out.join(TRAIN_FILE), &out.join(BASIS_FILE), &again).unwrap();
    assert_eq!(log_a, fs::read(again.join(LOG_FILE)).unwrap());
}

#[test]
fn eval_rejects_mismatched_grids() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let cfg = tiny(&[]);
    cmd_run(&cfg, out).unwrap();
    let other = out.join("other");
    cmd_generate(&tiny(&["problem.n_h=30"]), Split::Test, &other).unwrap();
    let err = cmd_eval(&cfg, &out.join(MODEL_FILE), &out.join(TRAIN_FILE), &other.join(TEST_FILE), out).unwrap_err();
    assert_eq!(err.kind(), "dimension_mismatch");
}

#[test]
fn unknown_family_is_a_config_error() {
    let err = RunConfig::from_toml_with_overrides("family = \"cnn\"", &[]).unwrap_err();
    assert_eq!(err.kind(), "config");
}

#[test]
fn sweep_resumes_without_duplicates() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let cfg = tiny(&["sweep.replicates=3", "sweep.pod_n=[1, 2, 4]"]);
    let first = cmd_sweep(SweepKind::PodDecay, &cfg, out, 2).unwrap();
    assert_eq!(first.new_rows, 9);
    let csv_path = SweepKind::PodDecay.csv_path(out);
    let full = fs::read_to_string(&csv_path).unwrap();
    let again = cmd_sweep(SweepKind::PodDecay, &cfg, out, 2).unwrap();
    assert_eq!(again.new_rows, 0);
    assert_eq!(fs::read_to_string(&csv_path).unwrap(), full);

    // drop the last two rows as if interrupted, then resume
    let lines: Vec<&str> = full.lines().collect();
    fs::write(&csv_path, lines[..lines.len() - 2].join("\n") + "\n").unwrap();
    let resumed = cmd_sweep(SweepKind::PodDecay, &cfg, out, 1).unwrap();
    assert_eq!(resumed.new_rows, 2);
    assert_eq!(fs::read_to_string(&csv_path).unwrap(), full);
    assert_eq!(summarize(SweepKind::PodDecay, &csv_path).unwrap(), resumed.lines);

    // a file from another sweep kind is refused
    fs::copy(&csv_path, SweepKind::Bounds.csv_path(out)).unwrap();
    assert!(cmd_sweep(SweepKind::Bounds, &cfg, out, 1).is_err());
}

#[test]
fn bounds_sweep_rows_satisfy_the_sandwich() {
    let dir = tempdir().unwrap();
    let cfg = tiny(&["sweep.pod_n=[1, 2, 4]"]);
    let res = cmd_sweep(SweepKind::Bounds, &cfg, dir.path(), 1).unwrap();
    assert_eq!(res.new_rows, 3);
    for row in csv_rows(&res.csv) {
        let e_r: f64 = row[5].parse().unwrap();
        let lower: f64 = row[10].parse().unwrap();
        let upper: f64 = row[11].parse().unwrap();
        assert!(lower <= e_r && e_r <= upper, "{row:?}");
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poddlrom"))
}

#[test]
fn binary_generates_and_reports_errors() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("o");
    let ok = bin()
        .args(["generate", "--out"])
        .arg(&out)
        .args(["--set", "data.n_s=3", "--set", "data.n_t=2", "--set", "problem.time_steps=50", "--seed", "4"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("N_h=100") && stdout.contains("N_data=6"), "{stdout}");
    assert_eq!(read_dataset(&out.join(TRAIN_FILE)).unwrap().n_data(), 6);

    let bad = bin().args(["show-config", "--set", "family=cnn"]).output().unwrap();
    assert!(!bad.status.success());
    let stderr = String::from_utf8_lossy(&bad.stderr);
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"]["kind"], "config");

    let missing = bin().args(["eval", "--out"]).arg(dir.path().join("nothing")).output().unwrap();
    assert!(!missing.status.success());
    let line = String::from_utf8_lossy(&missing.stderr).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn binary_config_flags_override_the_file() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, "seed = 1\n[pod]\nsvd = \"thin\"\n").unwrap();
    let out = bin()
        .arg("show-config")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--seed", "9", "--svd", "randomized", "--set", "train.lr=0.01"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg = RunConfig::from_toml_with_overrides(&String::from_utf8_lossy(&out.stdout), &[]).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.train.lr, 0.01);
    assert_eq!(cfg.pod.svd, poddlrom::cli::config::SvdChoice::Randomized);
}
