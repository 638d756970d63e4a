//! Stratified split followed by train-fitted imputation, correlation
//! filtering and standardization.

use distress::preprocess::{fit, stratified_split, DEFAULT_CORRELATION_THRESHOLD};
use distress::synthetic::{imbalanced_fixture, FixtureSpec};

fn main() -> distress::Result<()> {
    let ds = imbalanced_fixture(&FixtureSpec::default());
    let split = stratified_split(ds.labels(), 0.2, 7)?;
    let train = ds.subset(&split.train);
    let test = ds.subset(&split.test);
    let pos = |l: &[u8]| l.iter().filter(|&&v| v == 1).count();
    println!(
        "train {} rows ({} positive), test {} rows ({} positive)",
        train.n_rows(),
        pos(train.labels()),
        test.n_rows(),
        pos(test.labels())
    );

    let artifacts = fit(&train, DEFAULT_CORRELATION_THRESHOLD, 7)?;
    println!(
        "dropped by the correlation filter: {:?}",
        artifacts.dropped_names()
    );
    for (j, name) in artifacts.feature_names.iter().enumerate() {
        println!(
            "{name:>14}  median {:+.4}  mean {:+.4}  std {:.4}",
            artifacts.medians[j], artifacts.means[j], artifacts.stddevs[j]
        );
    }
    let x_test = artifacts.transform_matrix(&test)?;
    println!("test matrix {} x {}", x_test.n_rows(), x_test.n_cols());
    println!("scaler sha256 {}", artifacts.sha256());
    Ok(())
}
