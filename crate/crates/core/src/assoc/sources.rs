//! Data sources feeding the association pipeline: the sandbox twin and the production underlay.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::{DataRecord, DataSource, Emission, RecordKind};
use crate::sandbox::{generate_training_data, SandboxConfig, SandboxError};
use crate::underlay::RadioConfig;

/// Mixes a window start into a base seed so every window draws fresh episodes.
fn window_seed(base: u64, window: &Range<u64>) -> u64 {
    base ^ window.start.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs ε-exploratory episodes under `config` and turns every labelled decision into a
/// performance record. Episode `i` is stamped `window.start + i`, capped to the window.
fn episode_records(
    source_id: &str,
    config: &SandboxConfig,
    window: &Range<u64>,
) -> Result<Vec<DataRecord>, SandboxError> {
    let data = generate_training_data(config)?;
    let last = window.end.saturating_sub(1).max(window.start);
    let mut out = Vec::with_capacity(data.dataset.len());
    for (i, trace) in data.traces.iter().enumerate() {
        let ts = (window.start + i as u64).min(last);
        for (k, &(sta_id, ap_id)) in trace.decisions.iter().enumerate() {
            let row = &data.dataset.rows[trace.first_row + k];
            let mut rec = DataRecord::new(source_id, ts, RecordKind::Performance)
                .with("sta_id", f64::from(sta_id))
                .with("ap_id", f64::from(ap_id))
                .with("throughput", row.target);
            for (name, v) in data.dataset.feature_names.iter().zip(&row.features) {
                rec = rec.with(name, *v);
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// The simulator twin as a source of synthetic labelled data.
#[derive(Debug, Clone)]
pub struct SandboxSource {
    pub id: String,
    pub config: SandboxConfig,
}

impl DataSource for SandboxSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn emit(&mut self, window: Range<u64>) -> Emission {
        let config = SandboxConfig {
            seed: window_seed(self.config.seed, &window),
            ..self.config.clone()
        };
        match episode_records(&self.id, &config, &window) {
            Ok(records) => Emission { records, failure: None },
            Err(e) => Emission {
                records: Vec::new(),
                failure: Some(format!("sandbox source {}: {e}", self.id)),
            },
        }
    }
}

/// An edge observing the production network: association outcomes with their realized
/// throughput, plus unlabelled station reports.
#[derive(Debug, Clone)]
pub struct UnderlaySource {
    pub id: String,
    /// Scenario mix and exploration used to draw production episodes; `radio` is the real one.
    pub config: SandboxConfig,
}

impl UnderlaySource {
    pub fn new(
        id: impl Into<String>,
        template: &SandboxConfig,
        production_radio: RadioConfig,
        episodes: usize,
    ) -> Self {
        Self {
            id: id.into(),
            config: SandboxConfig {
                episodes,
                radio: production_radio,
                divergence: None,
                ..template.clone()
            },
        }
    }
}

impl DataSource for UnderlaySource {
    fn id(&self) -> &str {
        &self.id
    }

    fn emit(&mut self, window: Range<u64>) -> Emission {
        if self.config.episodes == 0 {
            return Emission::default();
        }
        let seed = window_seed(self.config.seed.rotate_left(17) ^ 0x0ed6e, &window);
        let config = SandboxConfig {
            seed,
            ..self.config.clone()
        };
        match episode_records(&self.id, &config, &window) {
            Ok(mut records) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let reports: Vec<DataRecord> = records
                    .iter()
                    .map(|r| {
                        DataRecord::new(&self.id, r.timestamp, RecordKind::UserInfo)
                            .with("sta_id", r.payload["sta_id"])
                            .with("x", rng.gen_range(0.0..self.config.side_m))
                            .with("y", rng.gen_range(0.0..self.config.side_m))
                    })
                    .collect();
                records.extend(reports);
                Emission { records, failure: None }
            }
            Err(e) => Emission {
                records: Vec::new(),
                failure: Some(format!("underlay source {}: {e}", self.id)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{collect, preprocess};
    use crate::sandbox::generate_training_data;

    fn small() -> SandboxConfig {
        SandboxConfig {
            episodes: 4,
            seed: 3,
            ..SandboxConfig::default()
        }
    }

    #[test]
    fn sandbox_records_replay_the_dataset() {
        let mut src = SandboxSource {
            id: "sandbox-0".into(),
            config: small(),
        };
        let window = 0..100;
        let em = src.emit(window.clone());
        assert!(em.failure.is_none());
        let direct = generate_training_data(&SandboxConfig {
            seed: window_seed(3, &window),
            ..small()
        })
        .unwrap();
        assert_eq!(em.records.len(), direct.dataset.len());
        for (rec, row) in em.records.iter().zip(&direct.dataset.rows) {
            assert!(rec.has_mandatory_keys());
            assert_eq!(rec.payload["throughput"], row.target);
            assert_eq!(rec.payload["rssi"], row.features[0]);
        }
    }

    #[test]
    fn windows_draw_fresh_data() {
        let mut src = SandboxSource {
            id: "s".into(),
            config: small(),
        };
        let a = src.emit(0..10).records;
        let b = src.emit(10..20).records;
        assert_ne!(
            a.iter().map(|r| r.payload["throughput"]).collect::<Vec<_>>(),
            b.iter().map(|r| r.payload["throughput"]).collect::<Vec<_>>()
        );
    }

    #[test]
    fn underlay_mixes_unlabelled_reports() {
        let mut src = UnderlaySource::new("edge-0", &small(), RadioConfig::default(), 3);
        let mut sources: [&mut dyn DataSource; 1] = [&mut src];
        let report = collect(&mut sources, 0..50).unwrap();
        let schema = crate::mlfo::MLIntent::example().norm_schema;
        let out = preprocess(&report.records, &schema).unwrap();
        assert!(out.counters.processed > 0);
        assert_eq!(out.counters.skipped_unlabelled, out.counters.processed);
        assert_eq!(out.counters.dropped_missing_keys, 0);
    }
}
