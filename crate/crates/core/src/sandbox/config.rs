use serde::{Deserialize, Serialize};

use super::SandboxError;
use crate::underlay::{DensityClass, RadioConfig};

/// Perturbations of the radio constants, modelling a mismatch between the twin and the
/// network it stands for. All zero means a faithful twin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceKnobs {
    pub tx_power_offset_db: f64,
    pub noise_floor_offset_db: f64,
    pub ref_loss_offset_db: f64,
    pub path_loss_exponent_delta: f64,
}

impl DivergenceKnobs {
    pub fn is_off(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, base: &RadioConfig) -> RadioConfig {
        RadioConfig {
            tx_power_dbm: base.tx_power_dbm + self.tx_power_offset_db,
            noise_floor_dbm: base.noise_floor_dbm + self.noise_floor_offset_db,
            ref_loss_db: base.ref_loss_db + self.ref_loss_offset_db,
            path_loss_exponent: base.path_loss_exponent + self.path_loss_exponent_delta,
            ..*base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeight {
    pub density: DensityClass,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxConfig {
    pub scenarios: Vec<ScenarioWeight>,
    pub episodes: usize,
    pub seed: u64,
    #[serde(default = "default_side")]
    pub side_m: f64,
    /// Probability of a uniformly random candidate instead of the strongest one.
    #[serde(default = "default_epsilon")]
    pub exploration_epsilon: f64,
    #[serde(default)]
    pub divergence: Option<DivergenceKnobs>,
    #[serde(default)]
    pub radio: RadioConfig,
}

fn default_side() -> f64 {
    100.0
}

fn default_epsilon() -> f64 {
    0.3
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            scenarios: DensityClass::ALL
                .iter()
                .map(|&density| ScenarioWeight {
                    density,
                    weight: 1.0 / 3.0,
                })
                .collect(),
            episodes: 400,
            seed: 1,
            side_m: default_side(),
            exploration_epsilon: default_epsilon(),
            divergence: None,
            radio: RadioConfig::default(),
        }
    }
}

impl SandboxConfig {
    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.scenarios.is_empty() {
            return Err(SandboxError::Config("no scenario classes".into()));
        }
        if self
            .scenarios
            .iter()
            .any(|s| !(s.weight >= 0.0) || !s.weight.is_finite())
        {
            return Err(SandboxError::Config("scenario weights must be non-negative".into()));
        }
        let total: f64 = self.scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SandboxError::Config(format!(
                "scenario weights sum to {total}, expected 1"
            )));
        }
        if self.episodes == 0 {
            return Err(SandboxError::Config("episodes must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.exploration_epsilon) {
            return Err(SandboxError::Config("exploration_epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Radio constants the twin actually simulates.
    pub fn effective_radio(&self) -> RadioConfig {
        match &self.divergence {
            Some(knobs) => knobs.apply(&self.radio),
            None => self.radio,
        }
    }

    /// Inverse-CDF pick of a density class for `u` in `[0, 1)`.
    pub(crate) fn pick_density(&self, u: f64) -> DensityClass {
        let mut acc = 0.0;
        for s in &self.scenarios {
            acc += s.weight;
            if u < acc {
                return s.density;
            }
        }
        self.scenarios.last().expect("validated non-empty").density
    }
}
