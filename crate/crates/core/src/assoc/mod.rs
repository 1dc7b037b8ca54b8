//! Neural-network AP association: features, placement, training/placement phases and the
//! SSF comparison harness.

mod associate;
mod evaluate;
mod features;
mod lifecycle;
mod predictor;
mod sources;
mod strategy;

use thiserror::Error;

pub use associate::{
    decide, nn_associate, nn_associate_detailed, placement_order, propose, AssociationOutcome, DecisionSource,
    PlacedDecision, DEFAULT_INDIFFERENCE_MBPS,
};
pub use evaluate::{evaluate_fig5, evaluate_strategies, EvaluationResult, SummaryRecord};
pub use features::{build_features, CandidateFeatures, FEATURE_NAMES};
pub use lifecycle::{
    default_sources, edge_sources, handle_request, run_training_phase, sandbox_radio, serve_tick, LifecycleError,
    ProductionScenario, RequestOutcome, ServedBy, StaEvent, TickOutcome, TrainingOutcome,
};
pub use predictor::{Candidate, ConstantPredictor, NnPredictor, OraclePredictor, ThroughputPredictor};
pub use sources::{SandboxSource, UnderlaySource};
pub use strategy::{AssociationStrategy, NnStrategy, SsfStrategy};

use crate::nn::NnError;
use crate::pipeline::PipelineError;
use crate::underlay::UnderlayError;

#[derive(Debug, Error)]
pub enum AssocError {
    #[error("unknown STA {0}")]
    UnknownSta(u32),
    #[error(transparent)]
    Underlay(#[from] UnderlayError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Nn(#[from] NnError),
}
