//! Loads a CSV (or the synthetic fixture) and prints its class balance.
//!
//! cargo run --example summarize -- [data.csv] [label column]

use distress::synthetic::{imbalanced_fixture, FixtureSpec};
use distress::{load_csv, summarize};

fn main() -> distress::Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = match args.next() {
        Some(path) => load_csv(path, &args.next().unwrap_or_else(|| "Bankrupt?".into()))?,
        None => imbalanced_fixture(&FixtureSpec::default()),
    };
    let s = summarize(&ds)?;
    println!("rows              {}", s.n_rows);
    println!("features          {}", s.n_features);
    println!("minority label    {}", s.minority_label);
    println!("minority count    {}", s.minority_count);
    println!("minority fraction {:.4}", s.minority_fraction);
    println!("missing cells     {}", s.missing_cell_count);
    Ok(())
}
