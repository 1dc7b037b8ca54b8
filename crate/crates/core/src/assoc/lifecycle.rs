//! The association use case run end to end under the orchestrator: the training phase that
//! ends in a validated model on the edges, and the placement phase serving station requests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::associate::{decide, DecisionSource};
use super::predictor::NnPredictor;
use super::sources::{SandboxSource, UnderlaySource};
use crate::mlfo::{InstanceState, MLIntent, MlfoError, PipelineInstance, PredictionSample};
use crate::nn::train;
use crate::pipeline::{
    collect, content_hash, preprocess, sink_apply, Acknowledgment, DataSource, Decision, LiveNetwork, PipelineError,
    Role,
};
use crate::sandbox::{validate_strategy, SandboxConfig, SandboxError, ValidationVerdict};
use crate::underlay::{compute_throughput_partial, ssf_choice, RadioConfig};

use super::{AssocError, NnStrategy};

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("instance is {0}, which cannot start a training phase")]
    NotTrainable(InstanceState),
    #[error("training phase failed: {0}")]
    Failed(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("intent has no sandbox section")]
    NoSandbox,
    #[error(transparent)]
    Mlfo(#[from] MlfoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}

/// Radio seen by the sandbox twin: the base constants plus any configured divergence.
pub fn sandbox_radio(intent: &MLIntent) -> RadioConfig {
    intent
        .sandbox
        .as_ref()
        .and_then(|s| s.divergence)
        .map_or_else(RadioConfig::default, |k| k.apply(&RadioConfig::default()))
}

fn sandbox_template(intent: &MLIntent) -> SandboxConfig {
    match &intent.sandbox {
        Some(s) => s.training_config(RadioConfig::default(), s.seed),
        None => SandboxConfig::default(),
    }
}

/// The sources an intent asks for: the sandbox twin when requested, and one underlay
/// source per edge host observing `production_radio`.
pub fn default_sources(intent: &MLIntent, production_radio: RadioConfig) -> Vec<Box<dyn DataSource + Send>> {
    let mut out: Vec<Box<dyn DataSource + Send>> = Vec::new();
    if intent.wants_sandbox() {
        let spec = intent.sandbox.as_ref().expect("wants_sandbox implies a section");
        for host in intent.pipeline_spec.hosts.iter().filter(|h| h.role == Role::Sandbox) {
            out.push(Box::new(SandboxSource {
                id: host.host_id.clone(),
                config: spec.training_config(RadioConfig::default(), spec.seed),
            }));
        }
    }
    out.extend(edge_sources(intent, production_radio));
    out
}

/// Only the production-facing sources, used when retraining on newly observed local data.
pub fn edge_sources(intent: &MLIntent, production_radio: RadioConfig) -> Vec<Box<dyn DataSource + Send>> {
    let has_edge_source = intent
        .pipeline_spec
        .stages
        .iter()
        .any(|s| s.kind == crate::pipeline::StageKind::Source && s.role == Role::Edge);
    if !has_edge_source || intent.collection.underlay_episodes == 0 {
        return Vec::new();
    }
    let template = sandbox_template(intent);
    let edges: Vec<_> = intent
        .pipeline_spec
        .hosts
        .iter()
        .filter(|h| h.role == Role::Edge)
        .collect();
    let per_edge = intent.collection.underlay_episodes.div_ceil(edges.len());
    edges
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            let mut src = UnderlaySource::new(h.host_id.clone(), &template, production_radio, per_edge);
            src.config.seed = src.config.seed.wrapping_add(i as u64 + 1);
            Box::new(src) as Box<dyn DataSource + Send>
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    pub model_hash: String,
    pub verdict: ValidationVerdict,
    pub attempts: usize,
    pub samples: usize,
}

/// Collect, preprocess, train, validate and distribute, until a model passes validation or
/// the attempt budget runs out. Starts from `initializing` or `retraining`; ends `serving` or
/// `failed`.
pub fn run_training_phase(
    instance: &mut PipelineInstance,
    sources: &mut [Box<dyn DataSource + Send>],
) -> Result<TrainingOutcome, LifecycleError> {
    match instance.state() {
        InstanceState::Initializing => instance.transition(InstanceState::Training)?,
        InstanceState::Retraining => {}
        other => return Err(LifecycleError::NotTrainable(other)),
    }
    let intent = instance.intent.clone();
    let Some(sandbox) = intent.sandbox.clone() else {
        instance.fail("intent has no sandbox to validate in");
        return Err(LifecycleError::NoSandbox);
    };
    let validation_config = sandbox.validation_config(sandbox_radio(&intent));
    let cloud = instance
        .host(Role::Cloud)
        .map(|h| h.host_id.clone())
        .unwrap_or_default();
    let sandbox_host = instance
        .host(Role::Sandbox)
        .map_or_else(|| cloud.clone(), |h| h.host_id.clone());
    let window_len = (sandbox.episodes.max(intent.collection.underlay_episodes) as u64).max(1);
    let attempts = intent.collection.max_training_attempts;

    for attempt in 1..=attempts {
        if attempt > 1 {
            instance.transition(InstanceState::Training)?;
        }
        let window = instance.next_window(window_len);
        let mut refs: Vec<&mut dyn DataSource> =
            sources.iter_mut().map(|s| s.as_mut() as &mut dyn DataSource).collect();
        let report = match collect(&mut refs, window.clone()) {
            Ok(r) => r,
            Err(e) => {
                instance.fail(e.to_string());
                return Err(LifecycleError::Failed(e.to_string()));
            }
        };
        instance.log(crate::mlfo::Event::DataCollected {
            window_start: window.start,
            window_end: window.end,
            records: report.records.len(),
            duplicates_removed: report.duplicates_removed,
            warnings: report.warnings.clone(),
        });
        let prepared = preprocess(&report.records, &intent.norm_schema)?;
        instance.log(crate::mlfo::Event::Preprocessed {
            processed: prepared.counters.processed,
            dropped_missing_keys: prepared.counters.dropped_missing_keys,
            skipped_unlabelled: prepared.counters.skipped_unlabelled,
        });
        let samples = prepared.counters.processed;
        let dataset = prepared.into_dataset(&intent.norm_schema);

        let layers = intent.model_spec.layer_sizes.clone();
        let config = intent.model_spec.training.clone();
        let schema = intent.norm_schema.clone();
        let trained = instance.run_job("train", &cloud, move || {
            let mut model = train(&dataset, &layers, &config).map_err(|e| e.to_string())?;
            model.norm_schema = schema;
            model.to_json().map(|bytes| (model, bytes)).map_err(|e| e.to_string())
        });
        let (model, artifact) = match trained {
            Ok(v) => v,
            Err(cause) => {
                instance.fail(cause.clone());
                return Err(LifecycleError::Failed(cause));
            }
        };
        let hash = content_hash(&artifact);
        instance.log(crate::mlfo::Event::ModelTrained { hash: hash.clone() });

        instance.transition(InstanceState::Validating)?;
        let policies = intent.policies.clone();
        let thresholds = intent.validation;
        let indifference = intent.placement.indifference_mbps;
        let cfg = validation_config.clone();
        let verdict = instance.run_job("validate", &sandbox_host, move || {
            let predictor = NnPredictor::new(&model).map_err(|e| e.to_string())?;
            let strategy = NnStrategy::new(&predictor, &policies).with_indifference(indifference);
            validate_strategy(&strategy, &cfg, &thresholds).map_err(|e| e.to_string())
        });
        let verdict = match verdict {
            Ok(v) => v,
            Err(cause) => {
                instance.fail(cause.clone());
                return Err(LifecycleError::Failed(cause));
            }
        };
        instance.record_validation(&hash, &verdict);
        if verdict.pass {
            instance.deploy(&artifact)?;
            instance.transition(InstanceState::Serving)?;
            return Ok(TrainingOutcome {
                model_hash: hash,
                verdict,
                attempts: attempt,
                samples,
            });
        }
        log::warn!(
            "attempt {attempt}: model {} failed validation (gain {:.4}, p10 ratio {:.4})",
            &hash[..12],
            verdict.mean_gain_vs_ssf,
            verdict.min_throughput_ratio
        );
    }
    let cause = format!("no model passed validation in {attempts} attempts");
    instance.fail(cause.clone());
    Err(LifecycleError::Failed(cause))
}

/// A station asking an edge for an AP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaEvent {
    pub edge_id: String,
    pub sta_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServedBy {
    Model,
    /// The policy admitted no model choice.
    PolicyFallback,
    /// The edge is not on the active model, so SSF decided.
    StaleModelFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestOutcome {
    pub decision: Decision,
    pub served_by: ServedBy,
    pub ack: Acknowledgment,
    /// Throughput the station realized right after the decision took effect.
    pub realized_mbps: f64,
}

/// Placement phase for one request: features from the live state, prediction with the edge's
/// model, policy, then the sink applies the decision. Model-backed outcomes are queued as
/// monitoring samples.
pub fn handle_request(
    instance: &mut PipelineInstance,
    network: &mut LiveNetwork,
    event: &StaEvent,
) -> Result<RequestOutcome, LifecycleError> {
    let active = instance.active_model_hash().map(str::to_string);
    let policies = instance.intent.policies.clone();
    let indifference = instance.intent.placement.indifference_mbps;
    let edge = instance
        .edge(&event.edge_id)
        .ok_or_else(|| LifecycleError::UnknownEdge(event.edge_id.clone()))?;

    let fresh = edge.active().filter(|m| Some(&m.hash) == active.as_ref());
    let (decision, served_by) = match fresh {
        Some(m) => {
            let predictor = NnPredictor::new(&m.model).map_err(AssocError::from)?;
            let placed = decide(
                &network.deployment,
                event.sta_id,
                &network.association,
                &predictor,
                &policies,
                indifference,
            )?;
            let by = match placed.source {
                DecisionSource::Model => ServedBy::Model,
                DecisionSource::SsfFallback => ServedBy::PolicyFallback,
            };
            (placed.decision, by)
        }
        None => {
            log::warn!(
                "edge {} is not on the active model; SSF for STA {}",
                event.edge_id,
                event.sta_id
            );
            let ap_id = ssf_choice(&network.deployment, event.sta_id).map_err(AssocError::from)?;
            (
                Decision {
                    sta_id: event.sta_id,
                    ap_id,
                    predicted_mbps: 0.0,
                },
                ServedBy::StaleModelFallback,
            )
        }
    };
    let edge = instance.edge_mut(&event.edge_id).expect("looked up above");
    let ack = sink_apply(edge, network, &decision)?;
    let realized_mbps = compute_throughput_partial(&network.deployment, &network.association)
        .map_err(AssocError::from)?
        .per_sta
        .get(&event.sta_id)
        .copied()
        .unwrap_or(0.0);
    if served_by != ServedBy::StaleModelFallback {
        instance.record_sample(PredictionSample {
            predicted_mbps: decision.predicted_mbps,
            achieved_mbps: realized_mbps,
        });
    }
    Ok(RequestOutcome {
        decision,
        served_by,
        ack,
        realized_mbps,
    })
}

/// The production network the edges serve: a fresh deployment per edge and tick, whose
/// stations all request association in placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionScenario {
    pub density: crate::underlay::DensityClass,
    pub side_m: f64,
    pub seed: u64,
    pub radio: RadioConfig,
}

impl ProductionScenario {
    pub fn new(density: crate::underlay::DensityClass, seed: u64) -> Self {
        Self {
            density,
            side_m: 100.0,
            seed,
            radio: RadioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickOutcome {
    pub tick: u64,
    pub requests: usize,
    pub served_by_model: usize,
    pub fallbacks: usize,
    pub mean_realized_mbps: f64,
    pub rolling_rel_error: Option<f64>,
    pub actions: Vec<crate::mlfo::Action>,
    pub retrained: Option<TrainingOutcome>,
}

/// Serves one tick of production traffic, reports it to the monitor, and acts on the result:
/// `Retrain` runs a training phase on freshly collected edge data.
pub fn serve_tick(
    instance: &mut PipelineInstance,
    scenario: &ProductionScenario,
    tick: u64,
) -> Result<TickOutcome, LifecycleError> {
    use crate::underlay::{generate_deployment_with, AssociationMap, UnderlayError};

    instance.tick = instance.tick.max(tick);
    let edge_ids: Vec<String> = instance.edges.iter().map(|e| e.id.clone()).collect();
    let (mut requests, mut by_model, mut fallbacks, mut realized) = (0, 0, 0, Vec::new());
    for (i, edge_id) in edge_ids.iter().enumerate() {
        let seed = scenario.seed ^ tick.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (i as u64) << 56;
        let deployment = match generate_deployment_with(scenario.density, scenario.side_m, seed, &scenario.radio) {
            Ok(d) => d,
            Err(UnderlayError::InfeasibleScenario { .. }) => continue,
            Err(e) => return Err(AssocError::from(e).into()),
        };
        let order = super::placement_order(&deployment, seed);
        let mut network = LiveNetwork {
            deployment,
            association: AssociationMap::new(),
        };
        for sta_id in order {
            let out = handle_request(
                instance,
                &mut network,
                &StaEvent {
                    edge_id: edge_id.clone(),
                    sta_id,
                },
            )?;
            requests += 1;
            match out.served_by {
                ServedBy::Model => by_model += 1,
                _ => fallbacks += 1,
            }
        }
        let report =
            crate::underlay::compute_throughput(&network.deployment, &network.association).map_err(AssocError::from)?;
        realized.extend(report.per_sta.into_values());
    }
    let report = instance.tick_report(tick);
    let actions = instance.monitor(&report);
    let rolling_rel_error = instance.monitor.rolling_error();
    let retrained = if actions.contains(&crate::mlfo::Action::Retrain) {
        let mut sources = edge_sources(&instance.intent, scenario.radio);
        Some(run_training_phase(instance, &mut sources)?)
    } else {
        None
    };
    Ok(TickOutcome {
        tick,
        requests,
        served_by_model: by_model,
        fallbacks,
        mean_realized_mbps: crate::stats::mean(&realized),
        rolling_rel_error,
        actions,
        retrained,
    })
}
