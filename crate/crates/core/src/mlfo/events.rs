//! The orchestrator's event log, written as line-delimited JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::instance::InstanceState;
use super::monitor::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Instantiated {
        instance_id: String,
        nodes: usize,
        links: usize,
    },
    StateChanged {
        from: InstanceState,
        to: InstanceState,
    },
    DataCollected {
        window_start: u64,
        window_end: u64,
        records: usize,
        duplicates_removed: usize,
        warnings: Vec<String>,
    },
    Preprocessed {
        processed: usize,
        dropped_missing_keys: usize,
        skipped_unlabelled: usize,
    },
    JobStarted {
        job: String,
        host: String,
    },
    JobFinished {
        job: String,
        host: String,
        ok: bool,
        detail: String,
    },
    ModelTrained {
        hash: String,
    },
    ModelValidated {
        hash: String,
        pass: bool,
        mean_gain_vs_ssf: f64,
        min_throughput_ratio: f64,
        episodes_evaluated: usize,
    },
    Distributed {
        hash: String,
        delivered: Vec<String>,
        failed: Vec<String>,
    },
    ModelActivated {
        hash: String,
    },
    MonitorTick {
        tick: u64,
        samples: usize,
        rolling_rel_error: Option<f64>,
    },
    ActionEmitted {
        action: Action,
    },
    Failed {
        cause: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub tick: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Append-only log, optionally mirrored line by line to a writer.
#[derive(Default)]
pub struct EventLog {
    entries: Vec<LoggedEvent>,
    mirror: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog")
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mirror_to(&mut self, out: Box<dyn Write + Send>) {
        self.mirror = Some(out);
    }

    pub fn push(&mut self, tick: u64, event: Event) {
        let entry = LoggedEvent {
            seq: self.entries.len() as u64,
            tick,
            event,
        };
        log::debug!("event {:?}", entry.event);
        if let Some(out) = &mut self.mirror {
            let line = serde_json::to_string(&entry).expect("events serialize");
            if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
                log::warn!("event log mirror failed: {e}");
            }
        }
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LoggedEvent] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<LoggedEvent>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }

    /// Hashes activated without a passing validation of the same hash earlier in the log.
    pub fn unvalidated_activations(&self) -> Vec<String> {
        let mut validated = std::collections::BTreeSet::new();
        let mut bad = Vec::new();
        for e in &self.entries {
            match &e.event {
                Event::ModelValidated { hash, pass: true, .. } => {
                    validated.insert(hash.clone());
                }
                Event::ModelActivated { hash } if !validated.contains(hash) => bad.push(hash.clone()),
                _ => {}
            }
        }
        bad
    }

    pub fn actions(&self) -> impl Iterator<Item = (u64, &Action)> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::ActionEmitted { action } => Some((e.tick, action)),
            _ => None,
        })
    }
}
