//! From-scratch multilayer perceptron for throughput regression.

mod gradcheck;
mod model;
mod norm;
mod train;

use thiserror::Error;

pub use gradcheck::{gradient_check, relative_error};
pub use model::{Activation, MlpModel};
pub use norm::{FeatureRange, NormSchema};
pub use train::{mse, train, Dataset, Sample, TrainingConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("expected {expected} features, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("bad network shape: {0}")]
    Shape(String),
    #[error("model has non-finite parameters")]
    NonFinite,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid normalization schema: {0}")]
    Schema(String),
    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}
