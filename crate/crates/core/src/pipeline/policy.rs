//! Policy entity: constraints that delimit what the model may decide.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::underlay::{AssociationMap, Deployment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Cap on stations associated to any one AP.
    MaxStasPerAp,
    /// Regulatory cap on the serving AP's transmit power.
    MaxTxPowerDbm,
    /// Minimum link rate (Mbps) an association must offer, protecting slow legacy clients.
    LegacyProtect,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::MaxStasPerAp => "max_stas_per_ap",
            PolicyKind::MaxTxPowerDbm => "max_tx_power_dbm",
            PolicyKind::LegacyProtect => "legacy_protect",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max_stas_per_ap" => Ok(PolicyKind::MaxStasPerAp),
            "max_tx_power_dbm" => Ok(PolicyKind::MaxTxPowerDbm),
            "legacy_protect" => Ok(PolicyKind::LegacyProtect),
            other => Err(PipelineError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub kind: PolicyKind,
    pub value: f64,
}

impl PolicyRule {
    pub fn new(kind: PolicyKind, value: f64) -> Result<Self, PipelineError> {
        let rule = Self { kind, value };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.value > 0.0) || !self.value.is_finite() {
            return Err(PipelineError::InvalidPolicy(format!(
                "{} needs a positive value",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Largest `max_stas_per_ap` cap in force, if any (the tightest one wins).
pub fn sta_cap(rules: &[PolicyRule]) -> Option<u32> {
    rules
        .iter()
        .filter(|r| r.kind == PolicyKind::MaxStasPerAp)
        .map(|r| r.value.floor() as u32)
        .min()
}

/// One scored candidate AP for a station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredAp {
    pub ap_id: u32,
    pub predicted_mbps: f64,
    pub rssi_dbm: f64,
    pub link_rate_mbps: f64,
}

/// Model output for one station: candidates ordered best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub sta_id: u32,
    pub ranked: Vec<ScoredAp>,
}

/// What the policy needs to know about the live network.
#[derive(Debug, Clone, Copy)]
pub struct NetworkState<'a> {
    pub deployment: &'a Deployment,
    pub association: &'a AssociationMap,
}

impl NetworkState<'_> {
    /// Stations currently on `ap_id`, not counting `sta_id` itself.
    fn occupancy(&self, ap_id: u32, sta_id: u32) -> u32 {
        self.association
            .assignment
            .iter()
            .filter(|(s, a)| **a == ap_id && **s != sta_id)
            .count() as u32
    }
}

/// Policy-constrained decision for one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub sta_id: u32,
    pub ap_id: u32,
    pub predicted_mbps: f64,
}

/// Picks the best-ranked candidate whose AP still has room under `max_stas_per_ap`, then checks
/// the remaining rules as assertions on that choice.
pub fn apply_policy(
    proposal: &Proposal,
    rules: &[PolicyRule],
    state: NetworkState<'_>,
) -> Result<Decision, PipelineError> {
    let cap = sta_cap(rules);
    let chosen = proposal
        .ranked
        .iter()
        .find(|c| cap.is_none_or(|cap| state.occupancy(c.ap_id, proposal.sta_id) < cap))
        .ok_or(PipelineError::NoFeasibleAssignment(proposal.sta_id))?;

    for rule in rules {
        match rule.kind {
            PolicyKind::MaxStasPerAp => {}
            PolicyKind::MaxTxPowerDbm => {
                let ap = state
                    .deployment
                    .ap(chosen.ap_id)
                    .ok_or(PipelineError::UnknownAp(chosen.ap_id))?;
                if ap.tx_power_dbm > rule.value {
                    return Err(PipelineError::PolicyViolation {
                        sta_id: proposal.sta_id,
                        rule: rule.kind,
                    });
                }
            }
            PolicyKind::LegacyProtect => {
                if chosen.link_rate_mbps < rule.value {
                    return Err(PipelineError::PolicyViolation {
                        sta_id: proposal.sta_id,
                        rule: rule.kind,
                    });
                }
            }
        }
    }
    Ok(Decision {
        sta_id: proposal.sta_id,
        ap_id: chosen.ap_id,
        predicted_mbps: chosen.predicted_mbps,
    })
}

/// Per-AP station counts exceeding `cap`, for auditing outputs.
pub fn over_cap(association: &AssociationMap, rules: &[PolicyRule]) -> BTreeMap<u32, u32> {
    match sta_cap(rules) {
        None => BTreeMap::new(),
        Some(cap) => association.counts().into_iter().filter(|(_, n)| *n > cap).collect(),
    }
}
