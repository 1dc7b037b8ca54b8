//! The ML function orchestrator: parses intents, realizes pipelines on hosts, drives their
//! lifecycle and monitors their predictions.

mod events;
mod instance;
mod intent;
mod monitor;

use thiserror::Error;

pub use events::{Event, EventLog, LoggedEvent};
pub use instance::{instantiate, EdgeDump, HostRegistry, InstanceState, PipelineInstance, StateDump};
pub use intent::{
    parse_intent, CollectionSpec, IntentErrors, IntentIssue, MLIntent, ModelSpec, MonitoringSpec, PipelineSpec,
    PlacementSpec, SandboxSpec, EXAMPLE_INTENT, INTENT_SCHEMA, KNOWN_USE_CASES,
};
pub use monitor::{relative_error, Action, PredictionSample, RollingMonitor, TickReport};

use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum MlfoError {
    #[error(transparent)]
    Intent(#[from] IntentErrors),
    #[error("host not in registry: {0}")]
    MissingHost(String),
    #[error("illegal state transition {from} -> {to}")]
    IllegalTransition { from: InstanceState, to: InstanceState },
    #[error("model {0} has not passed validation")]
    Unvalidated(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}
