//! Stratified 5-fold cross-validation of a small gradient-boosting model,
//! with SMOTE applied inside each training fold only.

use distress::evaluate::{cross_validate, CvOptions};
use distress::resample::SmoteConfig;
use distress::synthetic::{imbalanced_fixture, FixtureSpec};
use distress::ModelSpec;

fn main() -> distress::Result<()> {
    let ds = imbalanced_fixture(&FixtureSpec::default());
    let spec: ModelSpec = serde_json::from_value(serde_json::json!({
        "name": "gbdt_small",
        "family": "gbdt",
        "preset": "xgboost",
        "n_trees": 60,
        "max_depth": 4
    }))?;
    let opts = CvOptions {
        k: 5,
        seed: 5,
        smote: Some(SmoteConfig {
            seed: 5,
            ..SmoteConfig::default()
        }),
        ..CvOptions::default()
    };
    let report = cross_validate(&ds, &spec, &opts)?;
    for f in &report.folds {
        println!(
            "fold {}  train {:>5}  test {:>4}  recall {:.3}  auc {:.3}",
            f.fold, f.n_train, f.n_test, f.metrics.recall, f.metrics.roc_auc
        );
    }
    println!(
        "mean recall {:.3} +/- {:.3}, mean auc {:.3} +/- {:.3}",
        report.mean.recall, report.stddev.recall, report.mean.roc_auc, report.stddev.roc_auc
    );
    Ok(())
}
