//! The five model families and their shared prediction interface.

pub mod adaboost;
pub mod artifact;
pub mod ensemble;
pub mod forest;
pub mod gbdt;
pub mod logistic;
pub mod tree;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::explain::OutputSpace;
use crate::matrix::Matrix;

pub use adaboost::{train_adaboost, AdaBoostParams};
pub use artifact::ModelArtifact;
pub use ensemble::{sigmoid, Combination, TreeEnsemble};
pub use forest::{train_forest, ForestParams};
pub use gbdt::{train_gbdt, GbdtParams, Preset};
pub use logistic::{train_logistic, LinearModel, LogisticParams};
pub use tree::{train_tree, FeatureSubsample, Node, Tree, TreeParams, TreeTargets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logistic,
    Tree,
    Forest,
    Adaboost,
    Gbdt,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::Adaboost => "adaboost",
            Family::Gbdt => "gbdt",
        }
    }
}

/// Hyperparameters of the single-tree family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleTreeParams {
    #[serde(default = "SingleTreeParams::default_depth")]
    pub max_depth: usize,
    #[serde(default = "SingleTreeParams::default_leaf")]
    pub min_samples_leaf: usize,
}

impl SingleTreeParams {
    fn default_depth() -> usize {
        6
    }
    fn default_leaf() -> usize {
        1
    }
}

impl Default for SingleTreeParams {
    fn default() -> Self {
        SingleTreeParams {
            max_depth: Self::default_depth(),
            min_samples_leaf: Self::default_leaf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Logistic(LogisticParams),
    Tree(SingleTreeParams),
    Forest(ForestParams),
    Adaboost(AdaBoostParams),
    Gbdt(GbdtParams),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Logistic(_) => Family::Logistic,
            ModelParams::Tree(_) => Family::Tree,
            ModelParams::Forest(_) => Family::Forest,
            ModelParams::Adaboost(_) => Family::Adaboost,
            ModelParams::Gbdt(_) => Family::Gbdt,
        }
    }

    fn to_value(&self) -> Value {
        match self {
            ModelParams::Logistic(p) => serde_json::to_value(p),
            ModelParams::Tree(p) => serde_json::to_value(p),
            ModelParams::Forest(p) => serde_json::to_value(p),
            ModelParams::Adaboost(p) => serde_json::to_value(p),
            ModelParams::Gbdt(p) => serde_json::to_value(p),
        }
        .expect("hyperparameters serialize")
    }
}

/// A named model family with fully resolved hyperparameters.
///
/// Serialized flat: `{"name": .., "family": .., "seed": .., <hyperparameters>}`.
/// Unknown hyperparameter keys are rejected. For `gbdt`, `preset` selects the
/// default table and any other key overrides it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct ModelSpec {
    pub name: String,
    pub params: ModelParams,
    /// Explicit seed; when absent the pipeline derives one from its master seed.
    pub seed: Option<u64>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, params: ModelParams) -> Self {
        ModelSpec {
            name: name.into(),
            params,
            seed: None,
        }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// The six configurations compared in the default report.
    pub fn default_lineup() -> Vec<ModelSpec> {
        vec![
            ModelSpec::new(
                "logistic_regression",
                ModelParams::Logistic(LogisticParams::default()),
            ),
            ModelSpec::new(
                "random_forest",
                ModelParams::Forest(ForestParams::default()),
            ),
            ModelSpec::new("adaboost", ModelParams::Adaboost(AdaBoostParams::default())),
            ModelSpec::new(
                "xgboost",
                ModelParams::Gbdt(GbdtParams::preset(Preset::Xgboost)),
            ),
            ModelSpec::new(
                "catboost",
                ModelParams::Gbdt(GbdtParams::preset(Preset::Catboost)),
            ),
            ModelSpec::new(
                "lightgbm",
                ModelParams::Gbdt(GbdtParams::preset(Preset::Lightgbm)),
            ),
        ]
    }
}

impl TryFrom<Value> for ModelSpec {
    type Error = Error;

    fn try_from(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::Config("model spec must be a table".into()));
        };
        let family: Family = match map.remove("family") {
            Some(f) => serde_json::from_value(f)
                .map_err(|e| Error::Config(format!("model family: {e}")))?,
            None => return Err(Error::Config("model spec is missing `family`".into())),
        };
        let seed = match map.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| {
                Error::Config("model seed must be a non-negative integer".into())
            })?),
        };
        let name = match map.remove("name") {
            Some(Value::String(s)) => Some(s),
            None => None,
            Some(_) => return Err(Error::Config("model name must be a string".into())),
        };
        let cfg = |e: serde_json::Error| {
            Error::Config(format!("{} hyperparameters: {e}", family.as_str()))
        };
        let rest = Value::Object(map);
        let params = match family {
            Family::Logistic => ModelParams::Logistic(serde_json::from_value(rest).map_err(cfg)?),
            Family::Tree => ModelParams::Tree(serde_json::from_value(rest).map_err(cfg)?),
            Family::Forest => ModelParams::Forest(serde_json::from_value(rest).map_err(cfg)?),
            Family::Adaboost => ModelParams::Adaboost(serde_json::from_value(rest).map_err(cfg)?),
            Family::Gbdt => {
                let Value::Object(mut overrides) = rest else {
                    unreachable!()
                };
                let preset: Preset = match overrides.remove("preset") {
                    Some(p) => serde_json::from_value(p).map_err(cfg)?,
                    None => Preset::Xgboost,
                };
                let Value::Object(mut merged) = serde_json::to_value(GbdtParams::preset(preset))?
                else {
                    unreachable!()
                };
                for (k, v) in overrides {
                    if !merged.contains_key(&k) {
                        return Err(Error::Config(format!(
                            "gbdt hyperparameters: unknown field `{k}`"
                        )));
                    }
                    merged.insert(k, v);
                }
                ModelParams::Gbdt(serde_json::from_value(Value::Object(merged)).map_err(cfg)?)
            }
        };
        let name = name.unwrap_or_else(|| match &params {
            ModelParams::Gbdt(p) => serde_json::to_value(p.preset)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_else(|| "gbdt".into()),
            other => other.family().as_str().to_string(),
        });
        Ok(ModelSpec { name, params, seed })
    }
}

impl From<ModelSpec> for Value {
    fn from(spec: ModelSpec) -> Value {
        let mut map = Map::new();
        map.insert("name".into(), Value::String(spec.name));
        map.insert(
            "family".into(),
            Value::String(spec.params.family().as_str().into()),
        );
        if let Some(seed) = spec.seed {
            map.insert("seed".into(), Value::from(seed));
        }
        if let Value::Object(params) = spec.params.to_value() {
            map.extend(params);
        }
        Value::Object(map)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Linear(LinearModel),
    Ensemble(TreeEnsemble),
}

/// A trained model together with the feature count it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub n_features: usize,
    pub predictor: Predictor,
}

impl Model {
    /// Additive-space output: log-odds for linear and boosted models, the
    /// probability itself for averaging ensembles.
    pub fn margin(&self, x: &[f64]) -> f64 {
        match &self.predictor {
            Predictor::Linear(m) => m.margin(x),
            Predictor::Ensemble(e) => e.margin(x),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.predictor {
            Predictor::Linear(m) => m.predict_row(x),
            Predictor::Ensemble(e) => e.predict_row(x),
        }
    }

    pub fn output_space(&self) -> OutputSpace {
        match &self.predictor {
            Predictor::Linear(_) => OutputSpace::Logit,
            Predictor::Ensemble(e) => e.output_space(),
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.n_cols()
            )));
        }
        x.rows()
            .enumerate()
            .map(|(i, row)| {
                let p = self.predict_row(row);
                if p.is_finite() {
                    Ok(p)
                } else {
                    Err(Error::NonFinite(format!("prediction for row {i}")))
                }
            })
            .collect()
    }
}

/// Anything that maps a feature matrix to positive-class probabilities.
pub trait Scorer: Send + Sync {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>>;
}

impl Scorer for Model {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Model::predict_proba(self, x)
    }
}

pub fn train_model(spec: &ModelSpec, x: &Matrix, y: &[u8], seed: u64) -> Result<Model> {
    let seed = spec.seed.unwrap_or(seed);
    let predictor = match &spec.params {
        ModelParams::Logistic(p) => Predictor::Linear(train_logistic(x, y, p)?),
        ModelParams::Tree(p) => {
            if y.is_empty() || y.iter().all(|&v| v == y[0]) {
                return Err(Error::SingleClass);
            }
            let params = TreeParams {
                max_depth: p.max_depth,
                min_samples_leaf: p.min_samples_leaf,
                feature_subsample: FeatureSubsample::All,
            };
            let tree = train_tree(
                x,
                TreeTargets::Labels {
                    labels: y,
                    weights: None,
                },
                &params,
                &mut crate::seed::rng_from_seed(seed),
            )?;
            Predictor::Ensemble(TreeEnsemble {
                trees: vec![tree],
                tree_weights: vec![1.0],
                combination: Combination::AverageProbability,
                base_score: 0.0,
            })
        }
        ModelParams::Forest(p) => Predictor::Ensemble(train_forest(x, y, p, seed)?),
        ModelParams::Adaboost(p) => Predictor::Ensemble(train_adaboost(x, y, p, seed)?),
        ModelParams::Gbdt(p) => Predictor::Ensemble(train_gbdt(x, y, p, seed)?),
    };
    Ok(Model {
        n_features: x.n_cols(),
        predictor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn spec_parsing_resolves_defaults() {
        let s: ModelSpec =
            serde_json::from_value(json!({"family": "gbdt", "preset": "catboost", "max_depth": 4}))
                .unwrap();
        assert_eq!(s.name, "catboost");
        match s.params {
            ModelParams::Gbdt(p) => {
                assert_eq!(p.max_depth, 4);
                assert_eq!(p.reg_lambda, 3.0);
            }
            _ => panic!(),
        }
        let s: ModelSpec =
            serde_json::from_value(json!({"family": "forest", "name": "rf", "seed": 3})).unwrap();
        assert_eq!(s.seed, Some(3));
        assert_eq!(s.params, ModelParams::Forest(ForestParams::default()));
    }

    #[test]
    fn unknown_keys_rejected() {
        for v in [
            json!({"family": "gbdt", "depth": 4}),
            json!({"family": "logistic", "C": 1.0}),
            json!({"family": "forest", "n_estimators": 10}),
            json!({"family": "svm"}),
            json!({"name": "x"}),
        ] {
            assert!(
                serde_json::from_value::<ModelSpec>(v.clone()).is_err(),
                "{v}"
            );
        }
    }

    #[test]
    fn spec_echo_round_trips() {
        for spec in ModelSpec::default_lineup() {
            let v = serde_json::to_value(&spec).unwrap();
            let back: ModelSpec = serde_json::from_value(v).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn toml_spec_parses() {
        let s: ModelSpec =
            toml::from_str("family = \"forest\"\nn_trees = 10\nfeature_subsample = \"all\"")
                .unwrap();
        match s.params {
            ModelParams::Forest(p) => {
                assert_eq!(p.n_trees, 10);
                assert_eq!(p.feature_subsample, FeatureSubsample::All);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn schema_mismatch_and_zero_model() {
        let m = Model {
            n_features: 2,
            predictor: Predictor::Linear(LinearModel::zeros(2, 0.0)),
        };
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.predict_proba(&x).unwrap(), vec![0.5, 0.5]);
        let bad = Matrix::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(
            m.predict_proba(&bad),
            Err(Error::SchemaMismatch(_))
        ));
    }
}
