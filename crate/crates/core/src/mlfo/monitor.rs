//! Rolling prediction-error monitoring and the actions it triggers.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Retrain,
    FallbackToSsf { edge_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionSample {
    pub predicted_mbps: f64,
    pub achieved_mbps: f64,
}

impl PredictionSample {
    pub fn rel_error(&self) -> f64 {
        relative_error(self.predicted_mbps, self.achieved_mbps)
    }
}

/// `|predicted − achieved| / max(achieved, 1)`; the floor keeps starved stations from dominating.
pub fn relative_error(predicted: f64, achieved: f64) -> f64 {
    (predicted - achieved).abs() / achieved.max(1.0)
}

/// What the serving side reports for one tick.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: u64,
    pub samples: Vec<PredictionSample>,
    /// Model hash each edge is serving, `None` if it has none.
    pub edge_hashes: BTreeMap<String, Option<String>>,
}

/// Mean relative error over the samples of the last `eval_window` ticks, with at most one
/// retrain trigger per window. No trigger fires before a full window has been observed.
#[derive(Debug, Clone)]
pub struct RollingMonitor {
    pub eval_window: u64,
    pub threshold: f64,
    samples: VecDeque<(u64, f64)>,
    last_retrain: Option<u64>,
    /// First tick observed since the last reset.
    since: Option<u64>,
}

impl RollingMonitor {
    pub fn new(eval_window: u64, threshold: f64) -> Self {
        Self {
            eval_window: eval_window.max(1),
            threshold,
            samples: VecDeque::new(),
            last_retrain: None,
            since: None,
        }
    }

    /// Adds a tick's samples and returns the rolling error, if any samples are in the window.
    pub fn observe(&mut self, tick: u64, samples: &[PredictionSample]) -> Option<f64> {
        self.since.get_or_insert(tick);
        self.samples.extend(samples.iter().map(|s| (tick, s.rel_error())));
        let oldest = (tick + 1).saturating_sub(self.eval_window);
        while self.samples.front().is_some_and(|&(t, _)| t < oldest) {
            self.samples.pop_front();
        }
        self.rolling_error()
    }

    pub fn rolling_error(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        Some(self.samples.iter().map(|&(_, e)| e).sum::<f64>() / self.samples.len() as f64)
    }

    /// Whether `rolling` at `tick` should trigger a retrain; records the trigger if so.
    pub fn should_retrain(&mut self, tick: u64, rolling: Option<f64>) -> bool {
        let warm = self.since.is_some_and(|s| tick + 1 >= s + self.eval_window);
        let over = warm && rolling.is_some_and(|e| e > self.threshold);
        let cooled = self.last_retrain.is_none_or(|t| tick >= t + self.eval_window);
        if over && cooled {
            self.last_retrain = Some(tick);
            true
        } else {
            false
        }
    }

    /// Forgets samples scored against the previous model.
    pub fn reset_samples(&mut self) {
        self.samples.clear();
        self.since = None;
    }

    pub fn is_warm(&self, tick: u64) -> bool {
        self.since.is_some_and(|s| tick + 1 >= s + self.eval_window)
    }
}
