//! Seeded synthetic imbalanced datasets with a known, nonlinear signal.
//!
//! Only the first two features carry signal: the positive class is the top
//! `minority_fraction` of rows ranked by `x0^2 + x1^2 + 0.75 x0 + 0.5 e`,
//! i.e. an off-centre outer ring that no linear boundary captures. The other
//! features are standard normal noise, one of them nearly duplicated (to be
//! caught by the correlation filter) and a small share of noise cells missing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ingest::TabularDataset;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy)]
pub struct FixtureSpec {
    pub n_rows: usize,
    pub minority_fraction: f64,
    /// Independent noise features (a near-duplicate of the first is added).
    pub n_noise: usize,
    /// Probability that a noise cell is missing.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            n_rows: 5000,
            minority_fraction: 0.02,
            n_noise: 6,
            missing_rate: 0.01,
            seed: 0,
        }
    }
}

pub fn feature_names(spec: &FixtureSpec) -> Vec<String> {
    let mut names = vec!["signal_a".to_string(), "signal_b".to_string()];
    names.extend((0..spec.n_noise).map(|i| format!("noise_{i}")));
    if spec.n_noise > 0 {
        names.push("noise_0_copy".to_string());
    }
    names
}

pub fn imbalanced_fixture(spec: &FixtureSpec) -> TabularDataset {
    let mut rng = rng_from_seed(spec.seed);
    let names = feature_names(spec);
    let d = names.len();
    let mut cells = Vec::with_capacity(spec.n_rows * d);
    let mut scores = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        scores.push(a * a + b * b + 0.75 * a + 0.5 * e);
        cells.push(Some(a));
        cells.push(Some(b));
        let mut first_noise = 0.0;
        for k in 0..spec.n_noise {
            let v: f64 = rng.sample(StandardNormal);
            if k == 0 {
                first_noise = v;
            }
            let missing = rng.gen_bool(spec.missing_rate);
            cells.push(if missing { None } else { Some(v) });
        }
        if spec.n_noise > 0 {
            let jitter: f64 = rng.sample(StandardNormal);
            cells.push(Some(1.5 * first_noise + 0.05 * jitter));
        }
    }
    let n_pos =
        ((spec.minority_fraction * spec.n_rows as f64).round() as usize).clamp(1, spec.n_rows - 1);
    let mut order: Vec<usize> = (0..spec.n_rows).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    let mut labels = vec![0u8; spec.n_rows];
    for &i in &order[..n_pos] {
        labels[i] = 1;
    }
    TabularDataset::new(names, cells, labels).expect("fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape_and_balance() {
        let spec = FixtureSpec::default();
        let ds = imbalanced_fixture(&spec);
        assert_eq!(ds.n_rows(), 5000);
        assert_eq!(ds.n_features(), 9);
        assert_eq!(ds.labels().iter().filter(|&&l| l == 1).count(), 100);
        assert!(ds.missing_count() > 0);
        assert_eq!(ds, imbalanced_fixture(&spec));
    }
}
