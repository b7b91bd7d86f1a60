use std::path::Path;
use std::process::{Command, Output};

use hnnsae::data::synthetic_table;

fn hnnsae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnnsae"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("HNNSAE_DATA")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv(dir: &Path, n: usize) -> String {
    let path = dir.join("churn.csv");
    std::fs::write(&path, synthetic_table(n, 5).to_csv()).unwrap();
    path.to_string_lossy().into_owned()
}

const TINY_MODEL: &str = "epochs = 20\nrecord_every = 5\nffn_width = 8\nmlp_hidden = [8]\n";

#[test]
fn describe_prints_every_numeric_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = hnnsae(&["describe", "--input", &csv(dir.path(), 200)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for c in ["CreditScore", "Age", "Tenure", "Balance", "EstimatedSalary", "Kurtosis"] {
        assert!(text.contains(c), "{c} missing from\n{text}");
    }
}

#[test]
fn prepare_writes_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let input = csv(dir.path(), 100);
    let out_dir = dir.path().join("prepared");
    let out = hnnsae(&["prepare", "--input", &input, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ds = hnnsae::data::EncodedDataset::load(&out_dir.join("dataset.json")).unwrap();
    assert_eq!(ds.len(), 100);
}

#[test]
fn bad_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "RowNumber,CustomerId\n1,2\n").unwrap();
    assert_eq!(code(&hnnsae(&["describe", "--input", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&hnnsae(&["describe", "--input", "/nonexistent/file.csv"])), 1);
    assert_eq!(code(&hnnsae(&["suite", "--name", "nope", "--out", "x"])), 1);
    assert_eq!(code(&hnnsae(&[])), 1);
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(code(&hnnsae(&["suite", "--name", "baselines", "--out", o])), 1, "no dataset anywhere");
    assert_eq!(code(&hnnsae(&["suite", "--name", "baselines", "--runs", "1", "--out", o])), 1);
    assert_eq!(code(&hnnsae(&["report", "--from", o])), 1);
    assert_eq!(code(&hnnsae(&["--help"])), 0);
}

#[test]
fn train_from_config() {
    let dir = tempfile::tempdir().unwrap();
    csv(dir.path(), 200);
    let cfg = dir.path().join("train.toml");
    std::fs::write(&cfg, format!("input = \"churn.csv\"\nout = \"single\"\n[model]\n{TINY_MODEL}")).unwrap();
    let out = hnnsae(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let single = dir.path().join("single");
    let model = hnnsae::model::HnnsaeModel::load(&single.join("model.json")).unwrap();
    assert_eq!(model.config().epochs, 20);
    let curve = std::fs::read_to_string(single.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);
    assert!(single.join("run.json").exists());

    std::fs::write(&cfg, "input = \"churn.csv\"\nout = \"single\"\n[model]\nepochz = 3\n").unwrap();
    assert_eq!(code(&hnnsae(&["train", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn suite_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = csv(dir.path(), 200);
    let cfg = dir.path().join("suite.toml");
    std::fs::write(&cfg, format!("[model]\n{TINY_MODEL}")).unwrap();
    let out_dir = dir.path().join("smote");
    let o = out_dir.to_str().unwrap();
    let args = [
        "suite", "--name", "smote-ablation", "--runs", "2", "--seed", "3", "--out", o, "--workers", "2", "--input",
        &input, "--config", cfg.to_str().unwrap(),
    ];
    let out = hnnsae(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    for f in ["suite.json", "report.md", "summary/table3.csv", "summary/runs.csv", "runs/smote-on__run1.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let before = std::fs::read(out_dir.join("summary/table3.csv")).unwrap();
    std::fs::remove_dir_all(out_dir.join("summary")).unwrap();
    assert_eq!(code(&hnnsae(&["report", "--from", o])), 0);
    assert_eq!(std::fs::read(out_dir.join("summary/table3.csv")).unwrap(), before);
    // 20 epochs cannot reach the headline band
    assert_eq!(code(&hnnsae(&["report", "--from", o, "--strict"])), 3);
}
