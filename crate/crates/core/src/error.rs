use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv header is missing label column `{0}`")]
    MissingLabelColumn(String),
    #[error("unparseable numeric cell at row {row}, column `{column}`: `{value}`")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("label at row {row} is `{value}`, expected 0 or 1")]
    LabelOutOfRange { row: usize, value: String },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("column `{0}` has no non-missing values")]
    AllMissingColumn(String),
    #[error("dataset contains missing cells; impute before this step")]
    MissingCells,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("class {class} has {count} rows, too few to split")]
    ClassTooSmall { class: u8, count: usize },
    #[error("minority class has {minority} rows, need more than {required}")]
    TooFewMinority { minority: usize, required: usize },
    #[error("minority class has {minority} rows, fewer than {k} folds")]
    MinoritySmallerThanK { minority: usize, k: usize },
    #[error("target ratio {target} is below the current minority/majority ratio {current}")]
    RatioBelowCurrent { target: f64, current: f64 },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("need at least {required} rows, got {found}")]
    InsufficientRows { required: usize, found: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("explanation needs at most {max} features, model has {found}")]
    TooManyFeatures { max: usize, found: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("no feature survived preprocessing")]
    NoFeaturesRetained,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Stage name of a [`Error::Stage`] wrapper, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.into().at_stage(stage))
    }
}
