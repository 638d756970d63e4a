//! Trains the default six-model lineup on one holdout split and prints the
//! comparison table, ranked by minority recall and then ROC-AUC.

use distress::evaluate::{compare_models, HoldoutOptions};
use distress::synthetic::{imbalanced_fixture, FixtureSpec};
use distress::ModelSpec;

fn main() -> distress::Result<()> {
    let ds = imbalanced_fixture(&FixtureSpec {
        seed: 3,
        ..FixtureSpec::default()
    });
    let opts = HoldoutOptions {
        seed: 3,
        ..HoldoutOptions::default()
    };
    let table = compare_models(&ds, &ModelSpec::default_lineup(), &opts)?;
    table.write_csv(std::io::stdout())?;
    if let Some(best) = table.best() {
        let cm = &best.metrics.confusion;
        println!(
            "best: {} (tp {} fp {} tn {} fn {})",
            best.model, cm.tp, cm.fp, cm.tn, cm.fn_
        );
    }
    Ok(())
}
