//! Interventional TreeSHAP on a boosted model: local additivity for a few
//! rows and the global mean-|phi| ranking.

use distress::explain::{explain_rows, sample_background, ExplainOptions, GlobalImportance};
use distress::models::train_model;
use distress::preprocess::{fit, stratified_split};
use distress::synthetic::{imbalanced_fixture, FixtureSpec};
use distress::ModelSpec;

fn main() -> distress::Result<()> {
    let ds = imbalanced_fixture(&FixtureSpec::default());
    let split = stratified_split(ds.labels(), 0.2, 2)?;
    let (train, test) = (ds.subset(&split.train), ds.subset(&split.test));
    let art = fit(&train, 0.95, 2)?;
    let (x_train, x_test) = (art.transform_matrix(&train)?, art.transform_matrix(&test)?);

    let spec = ModelSpec::default_lineup()
        .into_iter()
        .find(|s| s.name == "xgboost")
        .expect("lineup has xgboost");
    let model = train_model(&spec, &x_train, train.labels(), 2)?;
    let background = sample_background(&x_train, 100, 2);
    let rows = sample_background(&x_test, 200, 3);
    let expl = explain_rows(&model, &rows, &background, &ExplainOptions::default())?;

    for e in expl.iter().take(3) {
        let sum: f64 = e.attributions.iter().sum();
        println!(
            "base {:+.4} + sum(phi) {:+.4} = {:+.4}  (model {:+.4}, p = {:.4})",
            e.base_value,
            sum,
            e.base_value + sum,
            e.model_output,
            e.output_probability()
        );
    }
    let names = art.retained_names();
    let global = GlobalImportance::from_explanations(&expl, &names)?;
    for (rank, f) in global.ranking.iter().enumerate() {
        println!(
            "{:>2}. {:<14} {:.4}",
            rank + 1,
            f.feature,
            f.mean_abs_attribution
        );
    }
    Ok(())
}
