//! Pre-deployment validation: candidate strategy versus SSF on identical fresh episodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SandboxConfig;
use super::SandboxError;
use crate::assoc::{AssociationStrategy, NnPredictor, NnStrategy, SsfStrategy};
use crate::nn::MlpModel;
use crate::pipeline::PolicyRule;
use crate::stats::{mean, percentile};
use crate::underlay::{compute_throughput, generate_deployment_with, UnderlayError};

/// Validation episodes come from a stream disjoint from the training episodes of the same seed.
const VALIDATION_STREAM: u64 = 0x5ee_d0f7_a11d;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationThresholds {
    pub gain_floor: f64,
    pub min_throughput_ratio: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self {
            gain_floor: 0.0,
            min_throughput_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub pass: bool,
    /// `(mean_candidate − mean_ssf) / mean_ssf` over all per-STA throughputs.
    pub mean_gain_vs_ssf: f64,
    /// 10th-percentile per-STA throughput, candidate over SSF.
    pub min_throughput_ratio: f64,
    pub episodes_evaluated: usize,
}

/// Ratio that stays finite: 1 when both are zero.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::MAX
    } else {
        1.0
    }
}

/// Runs `candidate` and SSF on the same `config.episodes` fresh deployments.
pub fn validate_strategy(
    candidate: &dyn AssociationStrategy,
    config: &SandboxConfig,
    thresholds: &ValidationThresholds,
) -> Result<ValidationVerdict, SandboxError> {
    config.validate()?;
    let radio = config.effective_radio();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ VALIDATION_STREAM);
    let (mut ours, mut base) = (Vec::new(), Vec::new());
    let mut evaluated = 0;
    for _ in 0..config.episodes {
        let density = config.pick_density(rng.gen());
        let seed: u64 = rng.gen();
        let deployment = match generate_deployment_with(density, config.side_m, seed, &radio) {
            Ok(d) => d,
            Err(UnderlayError::InfeasibleScenario { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let cand_map = candidate.associate(&deployment, seed)?;
        let ssf_map = SsfStrategy.associate(&deployment, seed)?;
        ours.extend(compute_throughput(&deployment, &cand_map)?.per_sta.into_values());
        base.extend(compute_throughput(&deployment, &ssf_map)?.per_sta.into_values());
        evaluated += 1;
    }
    let (m_ours, m_base) = (mean(&ours), mean(&base));
    let mean_gain_vs_ssf = if m_base > 0.0 { (m_ours - m_base) / m_base } else { 0.0 };
    let min_throughput_ratio = ratio(percentile(&ours, 10.0), percentile(&base, 10.0));
    let pass = evaluated > 0
        && mean_gain_vs_ssf >= thresholds.gain_floor
        && min_throughput_ratio >= thresholds.min_throughput_ratio;
    Ok(ValidationVerdict {
        pass,
        mean_gain_vs_ssf,
        min_throughput_ratio,
        episodes_evaluated: evaluated,
    })
}

/// Validates a trained model under the given policies.
pub fn validate_model(
    model: &MlpModel,
    policies: &[PolicyRule],
    config: &SandboxConfig,
    thresholds: &ValidationThresholds,
) -> Result<ValidationVerdict, SandboxError> {
    let predictor = NnPredictor::new(model)?;
    validate_strategy(&NnStrategy::new(&predictor, policies), config, thresholds)
}
