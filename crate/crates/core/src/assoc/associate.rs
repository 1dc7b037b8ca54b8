use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::build_features;
use super::predictor::{Candidate, ThroughputPredictor};
use super::AssocError;
use crate::pipeline::{apply_policy, Decision, NetworkState, PipelineError, PolicyRule, Proposal, ScoredAp};
use crate::underlay::{ssf_choice, AssociationMap, Deployment};

/// Default indifference margin: candidates predicted within this many Mbps of the best one
/// are treated as equally good and the strongest signal among them wins.
pub const DEFAULT_INDIFFERENCE_MBPS: f64 = 3.0;

/// Seeded processing order of the stations of `deployment`.
pub fn placement_order(deployment: &Deployment, order_seed: u64) -> Vec<u32> {
    let mut order: Vec<u32> = deployment.stas.iter().map(|s| s.id).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));
    order
}

/// Scores every AP the station hears and ranks them best first.
///
/// Each rank goes to the strongest-RSSI candidate (lowest AP id on equal RSSI) among those
/// predicted within `indifference_mbps` of the best remaining prediction.
pub fn propose<P: ThroughputPredictor + ?Sized>(
    deployment: &Deployment,
    sta_id: u32,
    state: &AssociationMap,
    predictor: &P,
    indifference_mbps: f64,
) -> Result<Proposal, AssocError> {
    let sta = deployment.sta(sta_id).ok_or(AssocError::UnknownSta(sta_id))?;
    let mut ranked = Vec::new();
    for ap in &deployment.aps {
        let link = deployment.radio.measure_link(ap, sta);
        if link.rssi_dbm < deployment.radio.sensitivity_dbm {
            continue;
        }
        let candidate = Candidate {
            deployment,
            sta,
            ap,
            state,
            features: build_features(deployment, sta, ap, state),
        };
        ranked.push(ScoredAp {
            ap_id: ap.id,
            predicted_mbps: predictor.predict(&candidate),
            rssi_dbm: link.rssi_dbm,
            link_rate_mbps: link.link_rate_mbps,
        });
    }
    Ok(Proposal {
        sta_id,
        ranked: rank_candidates(ranked, indifference_mbps),
    })
}

fn rank_candidates(mut rest: Vec<ScoredAp>, indifference_mbps: f64) -> Vec<ScoredAp> {
    let margin = indifference_mbps.max(0.0);
    let mut ranked = Vec::with_capacity(rest.len());
    while let Some(top) = rest.iter().map(|c| c.predicted_mbps).reduce(f64::max) {
        let (pick, _) = rest
            .iter()
            .enumerate()
            .filter(|(_, c)| c.predicted_mbps >= top - margin)
            .max_by(|(_, a), (_, b)| a.rssi_dbm.total_cmp(&b.rssi_dbm).then(b.ap_id.cmp(&a.ap_id)))
            .expect("the top candidate is always within the margin");
        ranked.push(rest.remove(pick));
    }
    ranked
}

/// How one station ended up where it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecisionSource {
    Model,
    /// The policy admitted no candidate, SSF chose instead.
    SsfFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedDecision {
    pub decision: Decision,
    pub source: DecisionSource,
}

/// Decides one station against `state` without committing.
pub fn decide<P: ThroughputPredictor + ?Sized>(
    deployment: &Deployment,
    sta_id: u32,
    state: &AssociationMap,
    predictor: &P,
    policies: &[PolicyRule],
    indifference_mbps: f64,
) -> Result<PlacedDecision, AssocError> {
    let proposal = propose(deployment, sta_id, state, predictor, indifference_mbps)?;
    let net = NetworkState {
        deployment,
        association: state,
    };
    match apply_policy(&proposal, policies, net) {
        Ok(decision) => Ok(PlacedDecision {
            decision,
            source: DecisionSource::Model,
        }),
        Err(err @ (PipelineError::NoFeasibleAssignment(_) | PipelineError::PolicyViolation { .. })) => {
            log::warn!("{err}; falling back to SSF for STA {sta_id}");
            let ap_id = ssf_choice(deployment, sta_id)?;
            Ok(PlacedDecision {
                decision: Decision {
                    sta_id,
                    ap_id,
                    predicted_mbps: proposal
                        .ranked
                        .iter()
                        .find(|c| c.ap_id == ap_id)
                        .map_or(0.0, |c| c.predicted_mbps),
                },
                source: DecisionSource::SsfFallback,
            })
        }
        Err(other) => Err(other.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationOutcome {
    pub map: AssociationMap,
    /// In processing order.
    pub decisions: Vec<PlacedDecision>,
}

impl AssociationOutcome {
    pub fn fallbacks(&self) -> impl Iterator<Item = u32> + '_ {
        self.decisions
            .iter()
            .filter(|d| d.source == DecisionSource::SsfFallback)
            .map(|d| d.decision.sta_id)
    }
}

/// Sequential greedy association: stations in seeded order, each to its best predicted AP
/// that the policies admit, with the default indifference margin.
pub fn nn_associate<P: ThroughputPredictor + ?Sized>(
    deployment: &Deployment,
    predictor: &P,
    policies: &[PolicyRule],
    order_seed: u64,
) -> Result<AssociationMap, AssocError> {
    Ok(nn_associate_detailed(deployment, predictor, policies, order_seed, DEFAULT_INDIFFERENCE_MBPS)?.map)
}

pub fn nn_associate_detailed<P: ThroughputPredictor + ?Sized>(
    deployment: &Deployment,
    predictor: &P,
    policies: &[PolicyRule],
    order_seed: u64,
    indifference_mbps: f64,
) -> Result<AssociationOutcome, AssocError> {
    let mut map = AssociationMap::new();
    let mut decisions = Vec::with_capacity(deployment.stas.len());
    for sta_id in placement_order(deployment, order_seed) {
        let placed = decide(deployment, sta_id, &map, predictor, policies, indifference_mbps)?;
        map.assign(sta_id, placed.decision.ap_id);
        decisions.push(placed);
    }
    Ok(AssociationOutcome { map, decisions })
}
