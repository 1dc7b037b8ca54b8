//! The seven logical entities of the ML pipeline (source, collector, pre-processor, model,
//! policy, distributor, sink) and the wiring that connects them across hosts.

pub mod distribute;
pub mod policy;
pub mod preprocess;
pub mod record;
pub mod stage;
pub mod transport;

use thiserror::Error;

pub use distribute::{
    content_hash, distribute, sink_apply, Acknowledgment, ActiveModel, DeliveryReceipt, DeliveryStatus, EdgeSink,
    LiveNetwork, ModelUpdate,
};
pub use policy::{apply_policy, over_cap, sta_cap, Decision, NetworkState, PolicyKind, PolicyRule, Proposal, ScoredAp};
pub use preprocess::{normalize_dataset, preprocess, FeatureVector, PreprocessCounters, PreprocessOutput};
pub use record::{collect, CollectReport, DataRecord, DataSource, Emission, RecordKind, StaticSource};
pub use stage::{
    check_hosts, check_order, Chain, HostRole, Link, LinkKind, Role, Stage, StageKind, StageNode, StageSpec,
    WiringGraph,
};
pub use transport::{decode_frame, encode_frame, FailureMode, SimTransport};

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown policy kind `{0}`")]
    UnknownPolicy(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("no feasible assignment under policy for STA {0}")]
    NoFeasibleAssignment(u32),
    #[error("assignment for STA {sta_id} violates {rule}")]
    PolicyViolation { sta_id: u32, rule: PolicyKind },
    #[error("unknown AP {0}")]
    UnknownAp(u32),
    #[error("unknown STA {0}")]
    UnknownSta(u32),
    #[error("collector has no registered sources")]
    NoSources,
    #[error("distributor has no registered sinks")]
    NoSinks,
    #[error("illegal wiring: {0}")]
    IllegalWiring(String),
    #[error("host placement: {0}")]
    Hosts(String),
    #[error("host {0} unreachable")]
    Unreachable(String),
    #[error("bad frame: {0}")]
    Frame(String),
    #[error("content hash mismatch: expected {expected}, got {got}")]
    HashMismatch { expected: String, got: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("message encoding: {0}")]
    Json(#[from] serde_json::Error),
}
