//! Throughput predictors the placement logic can rank candidate APs with.

use super::features::CandidateFeatures;
use crate::nn::{MlpModel, NnError};
use crate::underlay::{compute_throughput_partial, AccessPoint, AssociationMap, Deployment, Station};

/// Everything known about a candidate pairing at decision time.
pub struct Candidate<'a> {
    pub deployment: &'a Deployment,
    pub sta: &'a Station,
    pub ap: &'a AccessPoint,
    pub state: &'a AssociationMap,
    pub features: CandidateFeatures,
}

pub trait ThroughputPredictor {
    /// Predicted throughput (Mbps) the station gets right after joining the candidate AP.
    fn predict(&self, candidate: &Candidate<'_>) -> f64;

    /// Content hash of the underlying model, when there is one.
    fn model_hash(&self) -> Option<String> {
        None
    }
}

/// Runs an [`MlpModel`]: normalize with its schema, forward, map back to Mbps.
pub struct NnPredictor<'m> {
    model: &'m MlpModel,
}

impl<'m> NnPredictor<'m> {
    pub fn new(model: &'m MlpModel) -> Result<Self, NnError> {
        let arity = CandidateFeatures::names().len();
        if model.input_size() != arity || model.norm_schema.features.len() != arity {
            return Err(NnError::Arity {
                expected: arity,
                got: model.input_size(),
            });
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &MlpModel {
        self.model
    }

    pub fn predict_features(&self, features: &CandidateFeatures) -> f64 {
        let schema = &self.model.norm_schema;
        let x = schema
            .normalize(&features.to_vec())
            .expect("feature arity checked at construction");
        let y = self.model.forward(&x).expect("feature arity checked at construction");
        schema.target.denormalize(y).max(0.0)
    }
}

impl ThroughputPredictor for NnPredictor<'_> {
    fn predict(&self, candidate: &Candidate<'_>) -> f64 {
        self.predict_features(&candidate.features)
    }
}

/// Perfect predictor: evaluates the underlay on the post-decision state.
pub struct OraclePredictor;

impl ThroughputPredictor for OraclePredictor {
    fn predict(&self, c: &Candidate<'_>) -> f64 {
        let mut next = c.state.clone();
        next.assign(c.sta.id, c.ap.id);
        compute_throughput_partial(c.deployment, &next)
            .ok()
            .and_then(|r| r.per_sta.get(&c.sta.id).copied())
            .unwrap_or(0.0)
    }
}

/// Predicts the same value for every candidate.
pub struct ConstantPredictor(pub f64);

impl ThroughputPredictor for ConstantPredictor {
    fn predict(&self, _: &Candidate<'_>) -> f64 {
        self.0
    }
}
