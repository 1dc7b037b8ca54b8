//! A realized pipeline: its wiring, lifecycle state, edge sinks and event log.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use super::events::{Event, EventLog};
use super::intent::MLIntent;
use super::monitor::{Action, PredictionSample, RollingMonitor, TickReport};
use super::MlfoError;
use crate::nn::MlpModel;
use crate::pipeline::{content_hash, distribute, DeliveryReceipt, EdgeSink, HostRole, Role, SimTransport, WiringGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceState {
    Initializing,
    Training,
    Validating,
    Serving,
    Retraining,
    Failed,
}

impl InstanceState {
    pub fn can_move_to(self, next: InstanceState) -> bool {
        use InstanceState::*;
        matches!(
            (self, next),
            (Initializing, Training)
                | (Training, Validating)
                | (Training, Failed)
                | (Validating, Serving)
                | (Validating, Training)
                | (Validating, Failed)
                | (Serving, Retraining)
                | (Retraining, Validating)
                | (Retraining, Failed)
                | (Initializing, Failed)
        )
    }
}

impl fmt::Display for InstanceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("state serializes");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

/// The hosts actually available to the orchestrator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostRegistry {
    pub hosts: Vec<HostRole>,
}

impl HostRegistry {
    pub fn new(hosts: Vec<HostRole>) -> Self {
        Self { hosts }
    }

    /// A registry holding exactly the hosts an intent names.
    pub fn from_intent(intent: &MLIntent) -> Self {
        Self::new(intent.pipeline_spec.hosts.clone())
    }

    pub fn contains(&self, host: &HostRole) -> bool {
        self.hosts.contains(host)
    }
}

/// Builds the wiring graph of `intent` over hosts that must all be present in `registry`.
pub fn instantiate(intent: &MLIntent, registry: &HostRegistry) -> Result<PipelineInstance, MlfoError> {
    for host in &intent.pipeline_spec.hosts {
        if !registry.contains(host) {
            return Err(MlfoError::MissingHost(format!("{} ({})", host.host_id, host.role)));
        }
    }
    let graph = WiringGraph::build(&intent.pipeline_spec.stages, &intent.pipeline_spec.hosts)?;
    let edges = intent
        .pipeline_spec
        .hosts
        .iter()
        .filter(|h| h.role == Role::Edge)
        .map(|h| EdgeSink::new(h.host_id.clone()))
        .collect();
    let id = format!("{}-{}", intent.use_case, &content_hash(&intent.to_json())[..12]);
    let mut events = EventLog::new();
    events.push(
        0,
        Event::Instantiated {
            instance_id: id.clone(),
            nodes: graph.nodes.len(),
            links: graph.links.len(),
        },
    );
    Ok(PipelineInstance {
        id,
        monitor: RollingMonitor::new(
            intent.monitoring.eval_window,
            intent.monitoring.retrain_rel_error_threshold,
        ),
        intent: intent.clone(),
        graph,
        state: InstanceState::Initializing,
        active_model_hash: None,
        active_model: None,
        validated: BTreeSet::new(),
        edges,
        transport: SimTransport::new(),
        events,
        failure_cause: None,
        tick: 0,
        next_window: 0,
        pending: Vec::new(),
    })
}

pub struct PipelineInstance {
    pub id: String,
    pub intent: MLIntent,
    pub graph: WiringGraph,
    state: InstanceState,
    active_model_hash: Option<String>,
    active_model: Option<MlpModel>,
    validated: BTreeSet<String>,
    pub edges: Vec<EdgeSink>,
    pub transport: SimTransport,
    pub events: EventLog,
    pub monitor: RollingMonitor,
    failure_cause: Option<String>,
    /// Logical clock; advanced by monitoring ticks.
    pub tick: u64,
    next_window: u64,
    pending: Vec<PredictionSample>,
}

impl fmt::Debug for PipelineInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PipelineInstance")
            .field("id", &self.id)
            .field("state", &self.state)
            .field("active_model_hash", &self.active_model_hash)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDump {
    pub id: String,
    pub active_model_hash: Option<String>,
    pub applied_changes: usize,
}

/// Snapshot written by the CLI and inspected by tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub instance_id: String,
    pub use_case: String,
    pub state: InstanceState,
    pub active_model_hash: Option<String>,
    pub failure_cause: Option<String>,
    pub tick: u64,
    pub rolling_rel_error: Option<f64>,
    pub edges: Vec<EdgeDump>,
    pub wiring: WiringGraph,
    pub events_logged: usize,
}

impl PipelineInstance {
    pub fn state(&self) -> InstanceState {
        self.state
    }

    pub fn active_model_hash(&self) -> Option<&str> {
        self.active_model_hash.as_deref()
    }

    pub fn active_model(&self) -> Option<&MlpModel> {
        self.active_model.as_ref()
    }

    pub fn failure_cause(&self) -> Option<&str> {
        self.failure_cause.as_deref()
    }

    pub fn edge(&self, id: &str) -> Option<&EdgeSink> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn edge_mut(&mut self, id: &str) -> Option<&mut EdgeSink> {
        self.edges.iter_mut().find(|e| e.id == id)
    }

    pub fn host(&self, role: Role) -> Option<&HostRole> {
        self.intent.pipeline_spec.hosts.iter().find(|h| h.role == role)
    }

    pub fn log(&mut self, event: Event) {
        self.events.push(self.tick, event);
    }

    pub fn transition(&mut self, next: InstanceState) -> Result<(), MlfoError> {
        if !self.state.can_move_to(next) {
            return Err(MlfoError::IllegalTransition {
                from: self.state,
                to: next,
            });
        }
        log::info!("instance {}: {} -> {}", self.id, self.state, next);
        self.log(Event::StateChanged {
            from: self.state,
            to: next,
        });
        self.state = next;
        Ok(())
    }

    /// Moves to `failed`, recording the cause. Already-failed instances keep their first cause.
    pub fn fail(&mut self, cause: impl Into<String>) {
        if self.state == InstanceState::Failed {
            return;
        }
        let cause = cause.into();
        log::error!("instance {} failed: {cause}", self.id);
        self.log(Event::Failed { cause: cause.clone() });
        let from = self.state;
        self.log(Event::StateChanged {
            from,
            to: InstanceState::Failed,
        });
        self.state = InstanceState::Failed;
        self.failure_cause = Some(cause);
    }

    /// A fresh collection window of `len` ticks, never overlapping an earlier one.
    pub fn next_window(&mut self, len: u64) -> std::ops::Range<u64> {
        let start = self.next_window.max(self.tick);
        self.next_window = start + len.max(1);
        start..self.next_window
    }

    /// Runs `work` on a worker thread and waits for its completion message.
    pub fn run_job<T, F>(&mut self, job: &str, host: &str, work: F) -> Result<T, String>
    where
        T: Send + 'static,
        F: FnOnce() -> Result<T, String> + Send + 'static,
    {
        self.log(Event::JobStarted {
            job: job.to_string(),
            host: host.to_string(),
        });
        let (tx, rx) = mpsc::channel();
        let worker = thread::spawn(move || {
            // The receiver outlives the worker, so a send failure cannot happen.
            let _ = tx.send(work());
        });
        let result = rx
            .recv()
            .unwrap_or_else(|_| Err(format!("{job} job terminated without reporting")));
        if worker.join().is_err() {
            log::error!("{job} worker panicked");
        }
        self.log(Event::JobFinished {
            job: job.to_string(),
            host: host.to_string(),
            ok: result.is_ok(),
            detail: match &result {
                Ok(_) => "ok".into(),
                Err(e) => e.clone(),
            },
        });
        result
    }

    /// Marks `hash` as having passed validation; only such hashes may become active.
    pub fn record_validation(&mut self, hash: &str, verdict: &crate::sandbox::ValidationVerdict) {
        if verdict.pass {
            self.validated.insert(hash.to_string());
        }
        self.log(Event::ModelValidated {
            hash: hash.to_string(),
            pass: verdict.pass,
            mean_gain_vs_ssf: verdict.mean_gain_vs_ssf,
            min_throughput_ratio: verdict.min_throughput_ratio,
            episodes_evaluated: verdict.episodes_evaluated,
        });
    }

    /// Ships a validated artifact to every edge and makes it the active model.
    ///
    /// Edges that could not be reached keep whatever they had; the monitor later flags them.
    pub fn deploy(&mut self, artifact: &[u8]) -> Result<Vec<DeliveryReceipt>, MlfoError> {
        let hash = content_hash(artifact);
        if !self.validated.contains(&hash) {
            return Err(MlfoError::Unvalidated(hash));
        }
        let model = MlpModel::from_json(artifact).map_err(crate::pipeline::PipelineError::from)?;
        let receipts = distribute(artifact, &mut self.edges, &mut self.transport)?;
        self.log(Event::Distributed {
            hash: hash.clone(),
            delivered: receipts.iter().filter(|r| r.ok()).map(|r| r.sink_id.clone()).collect(),
            failed: receipts.iter().filter(|r| !r.ok()).map(|r| r.sink_id.clone()).collect(),
        });
        self.active_model_hash = Some(hash.clone());
        self.active_model = Some(model);
        self.monitor.reset_samples();
        self.log(Event::ModelActivated { hash });
        Ok(receipts)
    }

    /// Queues a (prediction, realized) pair for the next tick report.
    pub fn record_sample(&mut self, sample: PredictionSample) {
        self.pending.push(sample);
    }

    /// Drains the queued samples into a report for `tick`.
    pub fn tick_report(&mut self, tick: u64) -> TickReport {
        TickReport {
            tick,
            samples: std::mem::take(&mut self.pending),
            edge_hashes: self.edge_hashes(),
        }
    }

    /// Hashes the edges are serving right now.
    pub fn edge_hashes(&self) -> std::collections::BTreeMap<String, Option<String>> {
        self.edges
            .iter()
            .map(|e| (e.id.clone(), e.active_hash().map(str::to_string)))
            .collect()
    }

    /// Scores a tick of serving feedback. A serving instance may answer with `Retrain` (and
    /// moves to `retraining`) and with `FallbackToSsf` for every edge not on the active model.
    pub fn monitor(&mut self, report: &TickReport) -> Vec<Action> {
        self.tick = self.tick.max(report.tick);
        if self.state != InstanceState::Serving {
            return Vec::new();
        }
        let rolling = self.monitor.observe(report.tick, &report.samples);
        self.log(Event::MonitorTick {
            tick: report.tick,
            samples: report.samples.len(),
            rolling_rel_error: rolling,
        });
        let mut actions: Vec<Action> = report
            .edge_hashes
            .iter()
            .filter(|(_, h)| h.as_deref() != self.active_model_hash.as_deref())
            .map(|(id, _)| Action::FallbackToSsf { edge_id: id.clone() })
            .collect();
        if self.monitor.should_retrain(report.tick, rolling) {
            actions.push(Action::Retrain);
        }
        for a in &actions {
            self.log(Event::ActionEmitted { action: a.clone() });
        }
        if actions.contains(&Action::Retrain) {
            self.transition(InstanceState::Retraining)
                .expect("serving may always retrain");
        }
        actions
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            instance_id: self.id.clone(),
            use_case: self.intent.use_case.clone(),
            state: self.state,
            active_model_hash: self.active_model_hash.clone(),
            failure_cause: self.failure_cause.clone(),
            tick: self.tick,
            rolling_rel_error: self.monitor.rolling_error(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDump {
                    id: e.id.clone(),
                    active_model_hash: e.active_hash().map(str::to_string),
                    applied_changes: e.applied_changes(),
                })
                .collect(),
            wiring: self.graph.clone(),
            events_logged: self.events.len(),
        }
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("state dump serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NormSchema;
    use crate::pipeline::{FailureMode, StageKind};
    use crate::sandbox::ValidationVerdict;

    fn instance() -> PipelineInstance {
        let intent = MLIntent::example();
        instantiate(&intent, &HostRegistry::from_intent(&intent)).unwrap()
    }

    fn artifact() -> Vec<u8> {
        let names: Vec<String> = crate::assoc::FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        MlpModel::zeros(&[5, 1], NormSchema::unit(&names))
            .unwrap()
            .to_json()
            .unwrap()
    }

    fn pass() -> ValidationVerdict {
        ValidationVerdict {
            pass: true,
            mean_gain_vs_ssf: 0.1,
            min_throughput_ratio: 1.1,
            episodes_evaluated: 5,
        }
    }

    #[test]
    fn wiring_matches_intent() {
        let inst = instance();
        assert!(inst.graph.is_legal());
        assert_eq!(inst.state(), InstanceState::Initializing);
        assert_eq!(inst.edges.len(), 2);
        let cloud = inst.graph.kinds_on("cloud-0");
        assert!(cloud.contains(&StageKind::Collector) && cloud.contains(&StageKind::Distributor));
        assert_eq!(
            inst.graph.kinds_on("edge-0"),
            vec![StageKind::Source, StageKind::Model, StageKind::Policy, StageKind::Sink]
        );
        assert_eq!(inst.graph.kinds_on("sandbox-0"), vec![StageKind::Source]);
    }

    #[test]
    fn missing_host_is_an_error() {
        let intent = MLIntent::example();
        let mut reg = HostRegistry::from_intent(&intent);
        reg.hosts.retain(|h| h.host_id != "edge-1");
        assert!(matches!(instantiate(&intent, &reg), Err(MlfoError::MissingHost(h)) if h.contains("edge-1")));
    }

    #[test]
    fn illegal_transitions_rejected() {
        let mut inst = instance();
        assert!(inst.transition(InstanceState::Serving).is_err());
        inst.transition(InstanceState::Training).unwrap();
        inst.transition(InstanceState::Validating).unwrap();
        inst.transition(InstanceState::Serving).unwrap();
        assert!(inst.transition(InstanceState::Training).is_err());
        inst.fail("boom");
        assert_eq!(inst.state(), InstanceState::Failed);
        assert!(inst.transition(InstanceState::Training).is_err());
        assert_eq!(inst.failure_cause(), Some("boom"));
    }

    #[test]
    fn unvalidated_model_never_deploys() {
        let mut inst = instance();
        let art = artifact();
        assert!(matches!(inst.deploy(&art), Err(MlfoError::Unvalidated(_))));
        let hash = content_hash(&art);
        inst.record_validation(&hash, &pass());
        let receipts = inst.deploy(&art).unwrap();
        assert!(receipts.iter().all(|r| r.ok()));
        assert_eq!(inst.active_model_hash(), Some(hash.as_str()));
        assert!(inst.events.unvalidated_activations().is_empty());
    }

    #[test]
    fn stale_edge_gets_fallback_action() {
        let mut inst = instance();
        inst.transport.inject("edge-1", FailureMode::Unreachable);
        let art = artifact();
        inst.record_validation(&content_hash(&art), &pass());
        for s in [
            InstanceState::Training,
            InstanceState::Validating,
            InstanceState::Serving,
        ] {
            inst.transition(s).unwrap();
        }
        inst.deploy(&art).unwrap();
        let report = TickReport {
            tick: 1,
            samples: vec![],
            edge_hashes: inst.edge_hashes(),
        };
        assert_eq!(
            inst.monitor(&report),
            vec![Action::FallbackToSsf {
                edge_id: "edge-1".into()
            }]
        );
        assert_eq!(inst.state(), InstanceState::Serving);
    }

    #[test]
    fn background_job_reports_back() {
        let mut inst = instance();
        assert_eq!(inst.run_job("sum", "cloud-0", || Ok(2 + 2)), Ok(4));
        let err: Result<(), String> = inst.run_job("bad", "cloud-0", || Err("nope".into()));
        assert_eq!(err, Err("nope".into()));
        let finished = inst
            .events
            .entries()
            .iter()
            .filter(|e| matches!(e.event, Event::JobFinished { .. }))
            .count();
        assert_eq!(finished, 2);
    }

    #[test]
    fn windows_do_not_overlap() {
        let mut inst = instance();
        let a = inst.next_window(10);
        let b = inst.next_window(10);
        assert!(a.end <= b.start);
        inst.tick = 100;
        assert!(inst.next_window(5).start >= 100);
    }

    #[test]
    fn dump_is_json() {
        let inst = instance();
        let v: serde_json::Value = serde_json::from_str(&inst.dump_json()).unwrap();
        assert_eq!(v["state"], "initializing");
    }
}
