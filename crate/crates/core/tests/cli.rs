use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use distress::synthetic::{imbalanced_fixture, FixtureSpec};

const BIN: &str = env!("CARGO_BIN_EXE_distress");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("DISTRESS_SEED")
        .output()
        .unwrap()
}

fn write_fixture(dir: &Path) -> String {
    let path = dir.join("data.csv");
    imbalanced_fixture(&FixtureSpec {
        n_rows: 1200,
        minority_fraction: 0.05,
        ..FixtureSpec::default()
    })
    .save_csv(&path, "Bankrupt?")
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn write_config(dir: &Path, input: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
output_dir = "{}"

[data]
input = "{input}"

[evaluate]
cv_folds = 3

[explain]
background_size = 30
max_rows = 40

[[models]]
name = "lr"
family = "logistic"

[[models]]
name = "ada"
family = "adaboost"
n_rounds = 20

[[models]]
name = "gb"
family = "gbdt"
preset = "xgboost"
n_trees = 30
"#,
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let out = run(&["summarize", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_two_and_name_the_stage() {
    let out = run(&["summarize", "--input", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
}

#[test]
fn summarize_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = run(&["summarize", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_rows"], 1200);
    assert_eq!(v["minority_count"], 60);
}

#[test]
fn compare_emits_the_table_header() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let cfg = write_config(dir.path(), &input);
    let out = run(&["compare", "--config", &cfg, "--seed", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("Model,Precision,Recall,F1,ROC-AUC")
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn train_evaluate_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let cfg = write_config(dir.path(), &input);
    let model = dir.path().join("gb.json");
    let m = model.to_str().unwrap();
    let out = run(&["train", "--config", &cfg, "--model", "gb", "--out", m]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(&["evaluate", "--model", m, "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["roc_auc"].as_f64().unwrap() > 0.8);

    let out = run(&["explain", "--model", m, "--input", &input, "--rows", "0,7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("row_id,base_value,model_output,"));
    assert_eq!(text.lines().count(), 3);

    // dropping a column breaks the schema the artifact was trained on
    let raw = fs::read_to_string(&input).unwrap();
    let trimmed: String = raw
        .lines()
        .map(|l| l.split(',').skip(1).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, trimmed + "\n").unwrap();
    let out = run(&["evaluate", "--model", m, "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evaluate"));
}

#[test]
fn run_writes_every_output_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let cfg = write_config(dir.path(), &input);
    let out_dir = dir.path().join("out");
    let snapshot = || {
        let mut files = std::collections::BTreeMap::new();
        for entry in walk(&out_dir) {
            files.insert(entry.clone(), fs::read(&entry).unwrap());
        }
        files
    };
    let args = [
        "run",
        "--config",
        &cfg,
        "--seed",
        "42",
        "--normalize-report",
    ];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = snapshot();
    for name in [
        "report.json",
        "metrics.csv",
        "smote_audit.csv",
        "model_lr.json",
        "model_ada.json",
        "model_gb.json",
        "figures/class_distribution.svg",
        "figures/roc_overlay.svg",
        "figures/confusion_matrix.svg",
        "figures/shap_summary.svg",
    ] {
        assert!(first.contains_key(&out_dir.join(name)), "missing {name}");
    }
    fs::remove_dir_all(&out_dir).unwrap();
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(run(&threaded).status.code(), Some(0));
    assert_eq!(first, snapshot());

    let report: serde_json::Value =
        serde_json::from_slice(&first[&out_dir.join("report.json")]).unwrap();
    assert!(report.get("timings_ms").is_none());
    assert_eq!(report["config"]["master_seed"], 42);
    assert_eq!(report["leakage_audit"]["unchanged"], true);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
