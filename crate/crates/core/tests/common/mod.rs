//! Independent oracles and shared fixtures for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::OnceLock;

use ml5g_core::assoc::{default_sources, run_training_phase, TrainingOutcome};
use ml5g_core::mlfo::{instantiate, Event, HostRegistry, InstanceState, LoggedEvent, MLIntent, PipelineInstance};
use ml5g_core::nn::MlpModel;
use ml5g_core::pipeline::DataRecord;
use ml5g_core::underlay::{AssociationMap, Deployment, RadioConfig};

/// Strongest-RSSI AP for every station by scanning every AP; ties to the lowest AP id.
/// `None` when some station hears no AP.
pub fn ssf_scan(d: &Deployment) -> Option<AssociationMap> {
    let mut map = AssociationMap::new();
    for sta in &d.stas {
        let mut best: Option<(f64, u32)> = None;
        for ap in &d.aps {
            let rssi = ap.tx_power_dbm - d.radio.path_loss_db(ap.pos.distance(&sta.pos));
            if rssi < d.radio.sensitivity_dbm {
                continue;
            }
            best = match best {
                Some((r, id)) if r > rssi || (r == rssi && id < ap.id) => Some((r, id)),
                _ => Some((rssi, ap.id)),
            };
        }
        map.assign(sta.id, best?.1);
    }
    Some(map)
}

/// Max-min fair shares by bisection on the common level.
pub fn bisection_fill(airtime: f64, links: &[(f64, f64)]) -> Vec<f64> {
    let used = |level: f64| -> f64 {
        links
            .iter()
            .filter(|(r, _)| *r > 0.0)
            .map(|(r, d)| d.min(level) / r)
            .sum()
    };
    let top = links.iter().map(|l| l.1).fold(0.0, f64::max);
    let level = if airtime <= 0.0 {
        0.0
    } else if used(top) <= airtime {
        top
    } else {
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if used(mid) > airtime {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    links
        .iter()
        .map(|(r, d)| if *r > 0.0 { d.min(level) } else { 0.0 })
        .collect()
}

/// Sort, then drop repeats, written without any of the collector's helpers.
pub fn naive_merge(mut all: Vec<DataRecord>) -> Vec<DataRecord> {
    let key = |r: &DataRecord| {
        let payload: Vec<(String, u64)> = r.payload.iter().map(|(k, v)| (k.clone(), v.to_bits())).collect();
        (r.timestamp, r.source_id.clone(), r.kind, payload)
    };
    all.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        (ka.0, &ka.1)
            .cmp(&(kb.0, &kb.1))
            .then(ka.2.cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
    });
    let mut seen = BTreeSet::new();
    all.into_iter().filter(|r| seen.insert(key(r))).collect()
}

/// Scans a log for any move into `serving` not preceded by the activation of a model whose
/// hash already passed validation. Returns the offending sequence numbers.
pub fn serving_without_validation(log: &[LoggedEvent]) -> Vec<u64> {
    let mut passed = BTreeSet::new();
    let mut active: Option<String> = None;
    let mut bad = Vec::new();
    for entry in log {
        match &entry.event {
            Event::ModelValidated { hash, pass: true, .. } => {
                passed.insert(hash.clone());
            }
            Event::ModelActivated { hash } => {
                if !passed.contains(hash) {
                    bad.push(entry.seq);
                }
                active = Some(hash.clone());
            }
            Event::StateChanged {
                to: InstanceState::Serving,
                ..
            } if !active.as_ref().is_some_and(|h| passed.contains(h)) => bad.push(entry.seq),
            _ => {}
        }
    }
    bad
}

pub struct Trained {
    pub intent: MLIntent,
    pub outcome: TrainingOutcome,
    pub artifact: Vec<u8>,
    pub model: MlpModel,
    pub events: Vec<LoggedEvent>,
}

/// The example intent trained once per test binary.
pub fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let intent = MLIntent::example();
        let mut inst = instantiate(&intent, &HostRegistry::from_intent(&intent)).unwrap();
        let mut sources = default_sources(&intent, RadioConfig::default());
        let outcome = run_training_phase(&mut inst, &mut sources).unwrap();
        let edge = inst.edges[0].active().unwrap();
        Trained {
            artifact: edge.bytes.clone(),
            model: edge.model.clone(),
            events: inst.events.entries().to_vec(),
            outcome,
            intent,
        }
    })
}

/// A fresh instance of the example intent serving the shared trained model.
pub fn serving_instance() -> PipelineInstance {
    let t = trained();
    let mut inst = instantiate(&t.intent, &HostRegistry::from_intent(&t.intent)).unwrap();
    inst.transition(InstanceState::Training).unwrap();
    inst.transition(InstanceState::Validating).unwrap();
    inst.record_validation(&t.outcome.model_hash, &t.outcome.verdict);
    inst.deploy(&t.artifact).unwrap();
    inst.transition(InstanceState::Serving).unwrap();
    inst
}
