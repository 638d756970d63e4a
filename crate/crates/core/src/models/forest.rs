use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{Combination, TreeEnsemble};
use super::tree::{train_tree_on, FeatureSubsample, TreeParams, TreeTargets};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    #[serde(default = "ForestParams::default_trees")]
    pub n_trees: usize,
    #[serde(default = "ForestParams::default_depth")]
    pub max_depth: usize,
    #[serde(default = "ForestParams::default_subsample")]
    pub feature_subsample: FeatureSubsample,
    #[serde(default = "ForestParams::default_leaf")]
    pub min_samples_leaf: usize,
    #[serde(default = "ForestParams::default_bootstrap")]
    pub bootstrap: bool,
}

impl ForestParams {
    fn default_trees() -> usize {
        200
    }
    fn default_depth() -> usize {
        12
    }
    fn default_subsample() -> FeatureSubsample {
        FeatureSubsample::Sqrt
    }
    fn default_leaf() -> usize {
        1
    }
    fn default_bootstrap() -> bool {
        true
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: Self::default_trees(),
            max_depth: Self::default_depth(),
            feature_subsample: Self::default_subsample(),
            min_samples_leaf: Self::default_leaf(),
            bootstrap: Self::default_bootstrap(),
        }
    }
}

/// Bagged Gini trees. Tree `t` draws its bootstrap sample and split features
/// from `derive_seed(seed, "forest", t)`, so the result does not depend on how
/// many worker threads train trees concurrently.
pub fn train_forest(
    x: &Matrix,
    y: &[u8],
    params: &ForestParams,
    seed: u64,
) -> Result<TreeEnsemble> {
    if y.is_empty() || y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    if params.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let n = x.n_rows();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample: params.feature_subsample,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(seed, "forest", t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            train_tree_on(
                x,
                &rows,
                TreeTargets::Labels {
                    labels: y,
                    weights: None,
                },
                &tree_params,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeEnsemble {
        tree_weights: vec![1.0; trees.len()],
        trees,
        combination: Combination::AverageProbability,
        base_score: 0.0,
    })
}
