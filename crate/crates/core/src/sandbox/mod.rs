//! Closed-loop sandbox: a simulator twin of the underlay that produces synthetic training
//! data and validates models before they reach production.

mod config;
mod datagen;
mod validate;

use thiserror::Error;

pub use config::{DivergenceKnobs, SandboxConfig, ScenarioWeight};
pub use datagen::{
    generate_training_data, read_dataset_csv, run_episode, write_dataset_csv, EpisodeTrace, TrainingData,
};
pub use validate::{validate_model, validate_strategy, ValidationThresholds, ValidationVerdict};

use crate::assoc::AssocError;
use crate::nn::NnError;
use crate::underlay::UnderlayError;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("invalid sandbox config: {0}")]
    Config(String),
    #[error(transparent)]
    Underlay(#[from] UnderlayError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("dataset csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
