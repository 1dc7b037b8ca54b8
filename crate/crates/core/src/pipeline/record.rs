//! Data records emitted by sources and merged by the collector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    UserInfo,
    Performance,
    Application,
    ChannelReport,
}

impl RecordKind {
    /// Keys every record of this kind must carry.
    pub fn mandatory_keys(self) -> &'static [&'static str] {
        match self {
            RecordKind::UserInfo => &["sta_id", "x", "y"],
            RecordKind::Application => &["sta_id", "demand"],
            RecordKind::ChannelReport => &["sta_id", "ap_id", "rssi"],
            // A labelled association outcome: candidate features plus realized throughput.
            RecordKind::Performance => &[
                "sta_id",
                "ap_id",
                "rssi",
                "load",
                "sta_count",
                "demand",
                "neighbors",
                "throughput",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub source_id: String,
    pub timestamp: u64,
    pub kind: RecordKind,
    pub payload: BTreeMap<String, f64>,
}

impl DataRecord {
    pub fn new(source_id: impl Into<String>, timestamp: u64, kind: RecordKind) -> Self {
        Self {
            source_id: source_id.into(),
            timestamp,
            kind,
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.payload.insert(key.to_string(), value);
        self
    }

    pub fn has_mandatory_keys(&self) -> bool {
        self.kind.mandatory_keys().iter().all(|k| self.payload.contains_key(*k))
    }

    /// Total order used for merging and deduplication. Payload values compare by bit pattern.
    fn sort_key(&self) -> (u64, &str, RecordKind, Vec<(&str, u64)>) {
        (
            self.timestamp,
            self.source_id.as_str(),
            self.kind,
            self.payload.iter().map(|(k, v)| (k.as_str(), v.to_bits())).collect(),
        )
    }
}

/// What a source produced for a window. A source that fails mid-window still hands over
/// whatever it emitted before failing.
#[derive(Debug, Clone, Default)]
pub struct Emission {
    pub records: Vec<DataRecord>,
    pub failure: Option<String>,
}

/// The Source entity: anything that can emit records for a time window.
pub trait DataSource {
    fn id(&self) -> &str;
    fn emit(&mut self, window: std::ops::Range<u64>) -> Emission;
}

/// A fixed list of records, filtered to the window. Handy for tests and replays.
pub struct StaticSource {
    pub id: String,
    pub records: Vec<DataRecord>,
    /// Emit only this many records, then report a failure.
    pub fail_after: Option<usize>,
}

impl StaticSource {
    pub fn new(id: impl Into<String>, records: Vec<DataRecord>) -> Self {
        Self {
            id: id.into(),
            records,
            fail_after: None,
        }
    }
}

impl DataSource for StaticSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn emit(&mut self, window: std::ops::Range<u64>) -> Emission {
        let mut records: Vec<DataRecord> = self
            .records
            .iter()
            .filter(|r| window.contains(&r.timestamp))
            .cloned()
            .collect();
        let failure = match self.fail_after {
            Some(n) if n < records.len() => {
                records.truncate(n);
                Some(format!("source {} failed after {n} records", self.id))
            }
            _ => None,
        };
        Emission { records, failure }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectReport {
    pub records: Vec<DataRecord>,
    pub duplicates_removed: usize,
    /// Sources that failed mid-window, with their failure message.
    pub warnings: Vec<String>,
}

/// Collector: merges every source's emissions for `window`, ordered by `(timestamp, source_id)`,
/// with exact duplicates removed.
pub fn collect(
    sources: &mut [&mut dyn DataSource],
    window: std::ops::Range<u64>,
) -> Result<CollectReport, super::PipelineError> {
    if sources.is_empty() {
        return Err(super::PipelineError::NoSources);
    }
    let mut all = Vec::new();
    let mut warnings = Vec::new();
    for source in sources.iter_mut() {
        let emission = source.emit(window.clone());
        if let Some(msg) = emission.failure {
            log::warn!("{msg}; keeping partial output");
            warnings.push(msg);
        }
        all.extend(emission.records);
    }
    all.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let before = all.len();
    all.dedup_by(|a, b| a.sort_key() == b.sort_key());
    Ok(CollectReport {
        duplicates_removed: before - all.len(),
        records: all,
        warnings,
    })
}
