//! Synthetic training data: replay an ε-exploratory association process on generated
//! deployments and label each decision with the throughput it realized.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SandboxConfig;
use super::SandboxError;
use crate::assoc::{build_features, placement_order, CandidateFeatures};
use crate::nn::Dataset;
use crate::underlay::{
    compute_throughput_partial, generate_deployment_with, ssf_choice, AssociationMap, DensityClass, Deployment,
    UnderlayError,
};

/// The decision sequence of one episode, enough to replay every row it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub density: DensityClass,
    pub deployment_seed: u64,
    /// Index of this episode's first row in the dataset.
    pub first_row: usize,
    /// `(sta_id, ap_id)` in decision order.
    pub decisions: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingData {
    /// Raw (un-normalized) features and throughput targets.
    pub dataset: Dataset,
    pub traces: Vec<EpisodeTrace>,
    /// Episodes whose scenario draw was infeasible.
    pub skipped: usize,
}

impl TrainingData {
    /// Rebuilds the deployment an episode ran on.
    pub fn deployment(&self, config: &SandboxConfig, trace: &EpisodeTrace) -> Result<Deployment, UnderlayError> {
        generate_deployment_with(
            trace.density,
            config.side_m,
            trace.deployment_seed,
            &config.effective_radio(),
        )
    }
}

/// Runs one labelled episode on `deployment`, appending rows to `dataset`.
pub fn run_episode<R: Rng>(
    deployment: &Deployment,
    epsilon: f64,
    rng: &mut R,
    dataset: &mut Dataset,
) -> Result<Vec<(u32, u32)>, SandboxError> {
    let mut state = AssociationMap::new();
    let mut decisions = Vec::with_capacity(deployment.stas.len());
    for sta_id in placement_order(deployment, rng.gen()) {
        let sta = deployment.sta(sta_id).expect("order comes from the deployment");
        let candidates: Vec<_> = deployment
            .aps
            .iter()
            .filter(|ap| deployment.radio.hears(ap.tx_power_dbm, &ap.pos, &sta.pos))
            .collect();
        let explore = rng.gen::<f64>() < epsilon;
        let ap = if explore && !candidates.is_empty() {
            candidates[rng.gen_range(0..candidates.len())]
        } else {
            let id = ssf_choice(deployment, sta_id)?;
            deployment.ap(id).expect("ssf returns a known AP")
        };
        let features: CandidateFeatures = build_features(deployment, sta, ap, &state);
        state.assign(sta_id, ap.id);
        let realized = compute_throughput_partial(deployment, &state)?.per_sta[&sta_id];
        dataset.push(features.to_vec(), realized);
        decisions.push((sta_id, ap.id));
    }
    Ok(decisions)
}

/// Deterministic in `config.seed`.
pub fn generate_training_data(config: &SandboxConfig) -> Result<TrainingData, SandboxError> {
    config.validate()?;
    let radio = config.effective_radio();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dataset = Dataset::new(CandidateFeatures::names());
    let mut traces = Vec::with_capacity(config.episodes);
    let mut skipped = 0;
    for _ in 0..config.episodes {
        let density = config.pick_density(rng.gen());
        let deployment_seed: u64 = rng.gen();
        let deployment = match generate_deployment_with(density, config.side_m, deployment_seed, &radio) {
            Ok(d) => d,
            Err(UnderlayError::InfeasibleScenario { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let first_row = dataset.len();
        let decisions = run_episode(&deployment, config.exploration_epsilon, &mut rng, &mut dataset)?;
        traces.push(EpisodeTrace {
            density,
            deployment_seed,
            first_row,
            decisions,
        });
    }
    if skipped > 0 {
        log::warn!("sandbox skipped {skipped} infeasible scenario draws");
    }
    Ok(TrainingData {
        dataset,
        traces,
        skipped,
    })
}

/// Writes `rssi,load,sta_count,demand,neighbors,throughput` rows in raw units.
pub fn write_dataset_csv<W: Write>(out: W, dataset: &Dataset) -> Result<(), SandboxError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push("throughput");
    w.write_record(&header)?;
    for row in &dataset.rows {
        let mut fields: Vec<String> = row.features.iter().map(|v| v.to_string()).collect();
        fields.push(row.target.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset, SandboxError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let n = header.len();
    if n < 2 || &header[n - 1] != "throughput" {
        return Err(SandboxError::Config(
            "dataset csv must end with a `throughput` column".into(),
        ));
    }
    let mut dataset = Dataset::new(header.iter().take(n - 1).map(str::to_string).collect());
    for record in r.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| SandboxError::Config(format!("bad number in dataset csv: {e}")))?;
        let (features, target) = values.split_at(n - 1);
        dataset.push(features.to_vec(), target[0]);
    }
    Ok(dataset)
}
