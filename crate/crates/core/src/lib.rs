//! Imbalance-aware binary classification for tabular financial data.
//!
//! The crate covers the whole workflow: CSV ingestion, train-fitted
//! preprocessing, SMOTE oversampling, five model families sharing one tree
//! engine, minority-class metrics and Shapley attributions. Every stochastic
//! step takes an explicit seed so runs are reproducible bit for bit.

pub mod error;
pub mod evaluate;
pub mod explain;
pub mod ingest;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod resample;
pub mod seed;
pub mod svg;
pub mod synthetic;

pub use error::{Error, Result};
pub use ingest::{load_csv, summarize, DatasetSummary, LoadOptions, TabularDataset};
pub use matrix::Matrix;
pub use models::{Model, ModelSpec};

/// Version string echoed into reports and artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema version carried by every emitted file format.
pub const SCHEMA_VERSION: u32 = 1;
