use serde::{Deserialize, Serialize};

use crate::underlay::{AccessPoint, AssociationMap, Deployment, Station};

/// Feature names in model input order; also the raw dataset CSV columns (plus `throughput`).
pub const FEATURE_NAMES: [&str; 5] = ["rssi", "load", "sta_count", "demand", "neighbors"];

/// What the model sees about one (STA, AP) candidate pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateFeatures {
    pub rssi_dbm: f64,
    /// Sum of demands of the STAs currently on the AP.
    pub ap_load_mbps: f64,
    pub ap_sta_count: u32,
    pub sta_demand_mbps: f64,
    pub ap_cochannel_neighbors: u32,
}

impl CandidateFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.rssi_dbm,
            self.ap_load_mbps,
            self.ap_sta_count as f64,
            self.sta_demand_mbps,
            self.ap_cochannel_neighbors as f64,
        ]
    }

    pub fn names() -> Vec<String> {
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    }
}

/// Features for `sta` joining `ap` given the decisions in `state`.
///
/// The requesting station itself is excluded from the AP's load and count, so a
/// re-association request sees the same picture as a first association.
pub fn build_features(
    deployment: &Deployment,
    sta: &Station,
    ap: &AccessPoint,
    state: &AssociationMap,
) -> CandidateFeatures {
    let mut load = 0.0;
    let mut count = 0;
    for (&other, &ap_id) in &state.assignment {
        if ap_id != ap.id || other == sta.id {
            continue;
        }
        if let Some(s) = deployment.sta(other) {
            load += s.demand_mbps;
            count += 1;
        }
    }
    CandidateFeatures {
        rssi_dbm: deployment.radio.measure_link(ap, sta).rssi_dbm,
        ap_load_mbps: load,
        ap_sta_count: count,
        sta_demand_mbps: sta.demand_mbps,
        ap_cochannel_neighbors: deployment.cochannel_neighbors(ap) as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::underlay::{generate_deployment, DensityClass};

    #[test]
    fn empty_ap() {
        let d = generate_deployment(DensityClass::Medium, 100.0, 2).unwrap();
        let f = build_features(&d, &d.stas[0], &d.aps[1], &AssociationMap::new());
        assert_eq!(f.ap_load_mbps, 0.0);
        assert_eq!(f.ap_sta_count, 0);
        assert_eq!(f.sta_demand_mbps, d.stas[0].demand_mbps);
    }

    #[test]
    fn load_grows_by_demand() {
        let d = generate_deployment(DensityClass::Medium, 100.0, 2).unwrap();
        let mut state = AssociationMap::new();
        let before = build_features(&d, &d.stas[0], &d.aps[1], &state);
        state.assign(d.stas[3].id, d.aps[1].id);
        let after = build_features(&d, &d.stas[0], &d.aps[1], &state);
        assert_eq!(after.ap_load_mbps - before.ap_load_mbps, d.stas[3].demand_mbps);
        assert_eq!(after.ap_sta_count, 1);
    }

    #[test]
    fn self_excluded() {
        let d = generate_deployment(DensityClass::Medium, 100.0, 2).unwrap();
        let mut state = AssociationMap::new();
        state.assign(d.stas[0].id, d.aps[1].id);
        let f = build_features(&d, &d.stas[0], &d.aps[1], &state);
        assert_eq!(f.ap_sta_count, 0);
    }
}
