use serde::{Deserialize, Serialize};

use super::NnError;

/// Min-max range for one named quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            min,
            max,
        }
    }

    /// `(v - min) / (max - min)` clamped to `[0, 1]`.
    pub fn normalize(&self, v: f64) -> f64 {
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

/// Normalization schema shared by training and placement: one range per input feature,
/// plus the range of the regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSchema {
    pub features: Vec<FeatureRange>,
    pub target: FeatureRange,
}

impl NormSchema {
    /// Identity schema over `[0, 1]` for already-normalized data.
    pub fn unit(names: &[String]) -> Self {
        Self {
            features: names.iter().map(|n| FeatureRange::new(n.clone(), 0.0, 1.0)).collect(),
            target: FeatureRange::new("target", 0.0, 1.0),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        for r in self.features.iter().chain(std::iter::once(&self.target)) {
            if !r.min.is_finite() || !r.max.is_finite() {
                return Err(NnError::Schema(format!("range for `{}` is not finite", r.name)));
            }
            if r.min >= r.max {
                return Err(NnError::Schema(format!("range for `{}` has min >= max", r.name)));
            }
        }
        Ok(())
    }

    /// Normalizes a raw feature vector in schema order.
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>, NnError> {
        if raw.len() != self.features.len() {
            return Err(NnError::Arity {
                expected: self.features.len(),
                got: raw.len(),
            });
        }
        Ok(self.features.iter().zip(raw).map(|(r, v)| r.normalize(*v)).collect())
    }
}
