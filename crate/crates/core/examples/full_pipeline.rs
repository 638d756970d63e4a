//! End-to-end run: writes a fixture CSV and a config, then produces the
//! report, metrics, model artifacts and figures.
//!
//! cargo run --release --example full_pipeline -- [output dir]

use distress::pipeline::{run_pipeline, PipelineConfig, RunOptions};
use distress::synthetic::{imbalanced_fixture, FixtureSpec};

const CONFIG: &str = r#"
master_seed = 42

[smote]
k_neighbors = 5
target_ratio = 1.0

[evaluate]
cv_folds = 3

[explain]
background_size = 50
max_rows = 100

[[models]]
name = "logistic_regression"
family = "logistic"

[[models]]
name = "random_forest"
family = "forest"
n_trees = 60

[[models]]
family = "gbdt"
preset = "xgboost"
n_trees = 80
"#;

fn main() -> distress::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "distress_out".into());
    std::fs::create_dir_all(&out)?;
    let csv = format!("{out}/fixture.csv");
    imbalanced_fixture(&FixtureSpec::default()).save_csv(csv.as_ref(), "Bankrupt?")?;

    let mut cfg = PipelineConfig::from_str_with_format(CONFIG, false)?;
    cfg.data.input = Some(csv.into());
    cfg.output_dir = out.clone().into();
    let report = run_pipeline(&cfg, &RunOptions::default())?;

    for row in &report.comparison {
        println!(
            "{}. {:<20} precision {:.3} recall {:.3} f1 {:.3} auc {:.3}",
            row.rank, row.model, row.precision, row.recall, row.f1, row.roc_auc
        );
    }
    for e in &report.smote_comparison {
        println!(
            "{:<20} recall {:.3} -> {:.3} with SMOTE",
            e.model, e.recall_without_smote, e.recall_with_smote
        );
    }
    println!("best model {}; outputs in {out}/", report.best_model);
    Ok(())
}
