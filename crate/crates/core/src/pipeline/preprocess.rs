//! Pre-processor: turns labelled records into normalized feature vectors.

use serde::{Deserialize, Serialize};

use super::record::{DataRecord, RecordKind};
use super::PipelineError;
use crate::nn::{Dataset, NormSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
}

/// Counters for monitoring what the pre-processor threw away.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessCounters {
    pub processed: usize,
    /// Training-kind records missing a mandatory key.
    pub dropped_missing_keys: usize,
    /// Records of kinds that carry no training label.
    pub skipped_unlabelled: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOutput {
    pub samples: Vec<(FeatureVector, f64)>,
    pub counters: PreprocessCounters,
}

impl PreprocessOutput {
    pub fn into_dataset(self, schema: &NormSchema) -> Dataset {
        let mut ds = Dataset::new(schema.features.iter().map(|f| f.name.clone()).collect());
        for (fv, target) in self.samples {
            ds.push(fv.values, target);
        }
        ds
    }
}

/// Min-max normalizes every labelled (`performance`) record with `schema`; the target comes
/// from the key named by `schema.target`.
pub fn preprocess(records: &[DataRecord], schema: &NormSchema) -> Result<PreprocessOutput, PipelineError> {
    schema.validate()?;
    let names: Vec<String> = schema.features.iter().map(|f| f.name.clone()).collect();
    let mut out = PreprocessOutput::default();
    for record in records {
        if record.kind != RecordKind::Performance {
            out.counters.skipped_unlabelled += 1;
            continue;
        }
        let raw: Option<Vec<f64>> = schema
            .features
            .iter()
            .map(|f| record.payload.get(&f.name).copied())
            .collect();
        let target = record.payload.get(&schema.target.name).copied();
        let (Some(raw), Some(target), true) = (raw, target, record.has_mandatory_keys()) else {
            out.counters.dropped_missing_keys += 1;
            continue;
        };
        let values = schema.normalize(&raw)?;
        out.samples.push((
            FeatureVector {
                values,
                names: names.clone(),
            },
            schema.target.normalize(target),
        ));
        out.counters.processed += 1;
    }
    Ok(out)
}

/// Normalizes an already-tabular raw dataset with the same rule as [`preprocess`].
pub fn normalize_dataset(raw: &Dataset, schema: &NormSchema) -> Result<Dataset, PipelineError> {
    schema.validate()?;
    let mut ds = Dataset::new(schema.features.iter().map(|f| f.name.clone()).collect());
    for row in &raw.rows {
        ds.push(schema.normalize(&row.features)?, schema.target.normalize(row.target));
    }
    Ok(ds)
}
