//! Airtime-fair throughput model.
//!
//! Each AP gets `1 / (1 + N)` of the medium, `N` being its co-channel carrier-sense
//! neighbours. Inside a BSS the airtime is shared max-min fairly on throughput: all
//! unsatisfied stations end at a common level `t`, each spending `t / rate` airtime.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::association::AssociationMap;
use super::deployment::Deployment;
use super::UnderlayError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Achieved throughput per station, Mbps.
    pub per_sta: BTreeMap<u32, f64>,
    /// Airtime consumed per AP.
    pub per_ap_airtime: BTreeMap<u32, f64>,
    /// Airtime available to each AP after contention.
    pub per_ap_available: BTreeMap<u32, f64>,
}

impl ThroughputReport {
    pub fn mean(&self) -> f64 {
        if self.per_sta.is_empty() {
            return 0.0;
        }
        self.per_sta.values().sum::<f64>() / self.per_sta.len() as f64
    }
}

/// Max-min fair split of `airtime` among links given as `(rate_mbps, demand_mbps)`.
///
/// Zero-rate links get nothing. Solved exactly by walking the sorted demand breakpoints.
pub fn water_fill(airtime: f64, links: &[(f64, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; links.len()];
    let mut active: Vec<usize> = (0..links.len()).filter(|&i| links[i].0 > 0.0).collect();
    if active.is_empty() || airtime <= 0.0 {
        return out;
    }
    let full: f64 = active.iter().map(|&i| links[i].1 / links[i].0).sum();
    if full <= airtime {
        for &i in &active {
            out[i] = links[i].1;
        }
        return out;
    }
    active.sort_by(|&a, &b| links[a].1.total_cmp(&links[b].1).then(a.cmp(&b)));
    let mut spent = 0.0;
    let mut inv_rate_left: f64 = active.iter().map(|&i| 1.0 / links[i].0).sum();
    let mut level = 0.0;
    for (k, &i) in active.iter().enumerate() {
        let (rate, demand) = links[i];
        // Level at which the remaining stations (k..) exactly exhaust the budget.
        let candidate = (airtime - spent) / inv_rate_left;
        if candidate <= demand {
            level = candidate;
            for &j in &active[k..] {
                out[j] = level;
            }
            break;
        }
        out[i] = demand;
        spent += demand / rate;
        inv_rate_left -= 1.0 / rate;
        level = demand;
    }
    debug_assert!(level >= 0.0);
    out
}

/// Available airtime per AP id.
pub fn available_airtime(deployment: &Deployment) -> BTreeMap<u32, f64> {
    deployment
        .aps
        .iter()
        .map(|ap| (ap.id, 1.0 / (1.0 + deployment.cochannel_neighbors(ap) as f64)))
        .collect()
}

/// Throughput for a complete association.
pub fn compute_throughput(
    deployment: &Deployment,
    association: &AssociationMap,
) -> Result<ThroughputReport, UnderlayError> {
    association.validate(deployment)?;
    Ok(allocate(deployment, association))
}

/// Throughput for a possibly partial association; only assigned stations are reported.
pub fn compute_throughput_partial(
    deployment: &Deployment,
    association: &AssociationMap,
) -> Result<ThroughputReport, UnderlayError> {
    association.validate_partial(deployment)?;
    Ok(allocate(deployment, association))
}

fn allocate(deployment: &Deployment, association: &AssociationMap) -> ThroughputReport {
    let available = available_airtime(deployment);
    let mut report = ThroughputReport {
        per_ap_available: available.clone(),
        ..Default::default()
    };
    for ap in &deployment.aps {
        let stas: Vec<_> = association.stas_of(ap.id).filter_map(|id| deployment.sta(id)).collect();
        let links: Vec<(f64, f64)> = stas
            .iter()
            .map(|s| (deployment.radio.measure_link(ap, s).link_rate_mbps, s.demand_mbps))
            .collect();
        let shares = water_fill(available[&ap.id], &links);
        let mut used = 0.0;
        for ((sta, (rate, _)), t) in stas.iter().zip(&links).zip(&shares) {
            report.per_sta.insert(sta.id, *t);
            if *rate > 0.0 {
                used += t / rate;
            }
        }
        report.per_ap_airtime.insert(ap.id, used);
    }
    report
}
