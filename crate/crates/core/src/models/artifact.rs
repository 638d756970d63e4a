use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelSpec};
use crate::error::{Error, Result};
use crate::ingest::TabularDataset;
use crate::matrix::Matrix;
use crate::preprocess::FitArtifacts;

/// Versioned, self-contained model file: the preprocessing it was trained
/// behind, the trained model and a background sample for explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub tool_version: String,
    pub spec: ModelSpec,
    pub seed: u64,
    pub label_column: String,
    /// Post-filter feature names, in model column order.
    pub feature_names: Vec<String>,
    pub preprocessing: FitArtifacts,
    /// SHA-256 of the serialized preprocessing; ties the model to its scaler.
    pub scaler_sha256: String,
    /// Standardized background rows drawn from the training partition.
    pub background: Vec<Vec<f64>>,
    pub model: Model,
}

impl ModelArtifact {
    pub fn new(
        spec: ModelSpec,
        seed: u64,
        label_column: &str,
        preprocessing: FitArtifacts,
        background: &Matrix,
        model: Model,
    ) -> Self {
        ModelArtifact {
            schema_version: crate::SCHEMA_VERSION,
            tool_version: crate::VERSION.to_string(),
            spec,
            seed,
            label_column: label_column.to_string(),
            feature_names: preprocessing.retained_names(),
            scaler_sha256: preprocessing.sha256(),
            preprocessing,
            background: background.rows().map(<[f64]>::to_vec).collect(),
            model,
        }
    }

    pub fn background_matrix(&self) -> Result<Matrix> {
        Matrix::from_rows(&self.background)
    }

    /// Applies the stored preprocessing to a raw dataset.
    pub fn transform(&self, dataset: &TabularDataset) -> Result<Matrix> {
        if self.preprocessing.sha256() != self.scaler_sha256 {
            return Err(Error::SchemaMismatch(
                "preprocessing hash does not match artifact".into(),
            ));
        }
        self.preprocessing.transform_matrix(dataset)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let artifact: ModelArtifact = serde_json::from_str(&fs::read_to_string(path)?)?;
        if artifact.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "artifact schema_version {} is not supported",
                artifact.schema_version
            )));
        }
        Ok(artifact)
    }
}
