//! Per-density throughput comparison of association strategies on shared deployments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AssocError, AssociationStrategy, NnPredictor, NnStrategy, SsfStrategy};
use crate::nn::MlpModel;
use crate::pipeline::PolicyRule;
use crate::stats::{mean, percentile};
use crate::underlay::{
    compute_throughput, generate_deployment_with, write_rows_csv, DensityClass, RadioConfig, ThroughputRow,
    UnderlayError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub strategy: String,
    pub density: DensityClass,
    pub stations: usize,
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub rows: Vec<ThroughputRow>,
    pub summary: Vec<SummaryRecord>,
    /// `(density, seed)` pairs whose draw was infeasible.
    pub skipped: Vec<(DensityClass, u64)>,
}

impl EvaluationResult {
    pub fn summary_for(&self, strategy: &str, density: DensityClass) -> Option<&SummaryRecord> {
        self.summary
            .iter()
            .find(|s| s.strategy == strategy && s.density == density)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), UnderlayError> {
        write_rows_csv(out, &self.rows)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Per-STA throughputs of one strategy in one density class, in row order.
    pub fn throughputs(&self, strategy: &str, density: DensityClass) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy && r.density == density.as_str())
            .map(|r| r.throughput_mbps)
            .collect()
    }
}

/// Runs every strategy on the deployment of each `(density, seed)`; the seed doubles as the
/// placement-order seed.
pub fn evaluate_strategies(
    strategies: &[&dyn AssociationStrategy],
    densities: &[DensityClass],
    seeds: &[u64],
    side_m: f64,
    radio: &RadioConfig,
) -> Result<EvaluationResult, AssocError> {
    let mut result = EvaluationResult::default();
    for &density in densities {
        for &seed in seeds {
            let deployment = match generate_deployment_with(density, side_m, seed, radio) {
                Ok(d) => d,
                Err(UnderlayError::InfeasibleScenario { .. }) => {
                    log::warn!("skipping infeasible {density} seed {seed}");
                    result.skipped.push((density, seed));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            for strategy in strategies {
                let map = strategy.associate(&deployment, seed)?;
                let report = compute_throughput(&deployment, &map)?;
                result.rows.extend(deployment.stas.iter().map(|sta| ThroughputRow {
                    seed,
                    density: density.as_str().to_string(),
                    sta_id: sta.id,
                    demand_mbps: sta.demand_mbps,
                    throughput_mbps: report.per_sta[&sta.id],
                    strategy: strategy.name().to_string(),
                }));
            }
        }
        for strategy in strategies {
            let values = result.throughputs(strategy.name(), density);
            if values.is_empty() {
                continue;
            }
            result.summary.push(SummaryRecord {
                strategy: strategy.name().to_string(),
                density,
                stations: values.len(),
                mean: mean(&values),
                p10: percentile(&values, 10.0),
                p50: percentile(&values, 50.0),
                p90: percentile(&values, 90.0),
            });
        }
    }
    Ok(result)
}

/// SSF versus the trained model, per density class.
pub fn evaluate_fig5(
    model: &MlpModel,
    policies: &[PolicyRule],
    indifference_mbps: f64,
    densities: &[DensityClass],
    seeds: &[u64],
) -> Result<EvaluationResult, AssocError> {
    let predictor = NnPredictor::new(model)?;
    let nn = NnStrategy::new(&predictor, policies).with_indifference(indifference_mbps);
    evaluate_strategies(&[&SsfStrategy, &nn], densities, seeds, 100.0, &RadioConfig::default())
}
