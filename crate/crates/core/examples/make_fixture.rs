//! Writes the seeded synthetic imbalanced dataset to a CSV.
//!
//! cargo run --example make_fixture -- fixture.csv [seed]

use distress::synthetic::{imbalanced_fixture, FixtureSpec};

fn main() -> distress::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixture.csv".into());
    let seed = args
        .next()
        .map_or(0, |s| s.parse().expect("seed must be an integer"));
    let ds = imbalanced_fixture(&FixtureSpec {
        seed,
        ..FixtureSpec::default()
    });
    ds.save_csv(path.as_ref(), "Bankrupt?")?;
    println!(
        "wrote {} rows x {} features to {path}",
        ds.n_rows(),
        ds.n_features()
    );
    Ok(())
}
