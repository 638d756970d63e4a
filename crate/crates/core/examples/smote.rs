//! Oversamples the minority class of a training partition and checks every
//! synthetic row against its audit record.

use distress::preprocess::{fit, stratified_split};
use distress::resample::{interpolate, smote, SmoteConfig};
use distress::synthetic::{imbalanced_fixture, FixtureSpec};

fn main() -> distress::Result<()> {
    let ds = imbalanced_fixture(&FixtureSpec::default());
    let split = stratified_split(ds.labels(), 0.2, 1)?;
    let train = ds.subset(&split.train);
    let x = fit(&train, 0.95, 1)?.transform_matrix(&train)?;

    let cfg = SmoteConfig {
        k_neighbors: 5,
        target_ratio: 1.0,
        seed: 11,
    };
    let out = smote(&x, train.labels(), &cfg)?;
    println!(
        "minority {} -> {} (majority {}), {} synthetic rows",
        out.minority_before,
        out.minority_before + out.n_synthetic(),
        out.majority_count,
        out.n_synthetic()
    );

    let n0 = x.n_rows();
    let mut worst = 0.0f64;
    for (s, rec) in out.audit.iter().enumerate() {
        let expect: Vec<f64> = interpolate(
            x.row(rec.parent_index),
            x.row(rec.neighbor_index),
            rec.lambda,
        )
        .collect();
        for (a, b) in out.features.row(n0 + s).iter().zip(&expect) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("max deviation from the audited segment: {worst:e}");

    let mut audit = Vec::new();
    out.write_audit(&mut audit)?;
    let text = String::from_utf8_lossy(&audit);
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
