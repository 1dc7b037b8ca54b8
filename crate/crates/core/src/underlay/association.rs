use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::deployment::Deployment;
use super::UnderlayError;

/// Total STA → AP assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub assignment: BTreeMap<u32, u32>,
}

impl AssociationMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ap_of(&self, sta_id: u32) -> Option<u32> {
        self.assignment.get(&sta_id).copied()
    }

    pub fn assign(&mut self, sta_id: u32, ap_id: u32) -> Option<u32> {
        self.assignment.insert(sta_id, ap_id)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Stations per AP; APs without stations are absent.
    pub fn counts(&self) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for ap in self.assignment.values() {
            *out.entry(*ap).or_insert(0) += 1;
        }
        out
    }

    pub fn stas_of(&self, ap_id: u32) -> impl Iterator<Item = u32> + '_ {
        self.assignment
            .iter()
            .filter(move |(_, a)| **a == ap_id)
            .map(|(s, _)| *s)
    }

    /// Checks that every STA of `deployment` is assigned to an existing AP, that no
    /// unknown STA appears, and that no AP exceeds its `max_stas` cap.
    pub fn validate(&self, deployment: &Deployment) -> Result<(), UnderlayError> {
        self.validate_partial(deployment)?;
        if let Some(sta) = deployment.stas.iter().find(|s| !self.assignment.contains_key(&s.id)) {
            return Err(UnderlayError::Unassigned(sta.id));
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but allows unassigned stations.
    pub fn validate_partial(&self, deployment: &Deployment) -> Result<(), UnderlayError> {
        for (&sta, &ap) in &self.assignment {
            if deployment.sta(sta).is_none() {
                return Err(UnderlayError::UnknownSta(sta));
            }
            if deployment.ap(ap).is_none() {
                return Err(UnderlayError::UnknownAp(ap));
            }
        }
        let counts = self.counts();
        for ap in &deployment.aps {
            if let (Some(cap), Some(&n)) = (ap.max_stas, counts.get(&ap.id)) {
                if n > cap {
                    return Err(UnderlayError::CapExceeded {
                        ap_id: ap.id,
                        count: n,
                        cap,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Strongest Signal First: every STA joins its highest-RSSI AP, lowest AP id on ties.
/// Load and policy caps are ignored.
pub fn ssf_associate(deployment: &Deployment) -> Result<AssociationMap, UnderlayError> {
    let mut map = AssociationMap::new();
    for sta in &deployment.stas {
        let ap = ssf_choice(deployment, sta.id)?;
        map.assign(sta.id, ap);
    }
    Ok(map)
}

/// The SSF choice for a single station.
pub fn ssf_choice(deployment: &Deployment, sta_id: u32) -> Result<u32, UnderlayError> {
    let sta = deployment.sta(sta_id).ok_or(UnderlayError::UnknownSta(sta_id))?;
    let mut best: Option<(f64, u32)> = None;
    for ap in &deployment.aps {
        let m = deployment.radio.measure_link(ap, sta);
        if m.rssi_dbm < deployment.radio.sensitivity_dbm {
            continue;
        }
        let better = match best {
            None => true,
            Some((rssi, id)) => m.rssi_dbm > rssi || (m.rssi_dbm == rssi && ap.id < id),
        };
        if better {
            best = Some((m.rssi_dbm, ap.id));
        }
    }
    best.map(|(_, id)| id).ok_or(UnderlayError::NoCoverage(sta_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::underlay::{AccessPoint, DensityClass, Position, RadioConfig, Station};

    fn deployment(aps: &[(f64, f64)], stas: &[(f64, f64)]) -> Deployment {
        Deployment {
            aps: aps
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| AccessPoint {
                    id: i as u32,
                    pos: Position { x, y },
                    channel: 1,
                    tx_power_dbm: 20.0,
                    max_stas: None,
                })
                .collect(),
            stas: stas
                .iter()
                .enumerate()
                .map(|(j, &(x, y))| Station {
                    id: (aps.len() + j) as u32,
                    pos: Position { x, y },
                    demand_mbps: 10.0,
                })
                .collect(),
            side: 100.0,
            seed: 0,
            density_class: DensityClass::Sparse,
            radio: RadioConfig::default(),
        }
    }

    #[test]
    fn single_ap_takes_everyone() {
        let d = deployment(&[(50.0, 50.0)], &[(40.0, 50.0), (55.0, 60.0), (50.0, 30.0)]);
        let map = ssf_associate(&d).unwrap();
        assert!(map.assignment.values().all(|&ap| ap == 0));
        assert_eq!(map.len(), 3);
    }

    #[test]
    fn equidistant_tie_goes_to_lower_id() {
        let d = deployment(&[(60.0, 50.0), (40.0, 50.0)], &[(50.0, 50.0)]);
        assert_eq!(ssf_associate(&d).unwrap().ap_of(2), Some(0));
    }

    #[test]
    fn uncovered_sta_is_an_error() {
        let d = deployment(&[(0.0, 0.0)], &[(100.0, 100.0)]);
        assert!(matches!(ssf_associate(&d), Err(UnderlayError::NoCoverage(1))));
    }

    #[test]
    fn validate_catches_cap_and_unknowns() {
        let mut d = deployment(&[(50.0, 50.0)], &[(40.0, 50.0), (55.0, 60.0)]);
        d.aps[0].max_stas = Some(1);
        let map = ssf_associate(&d).unwrap();
        assert!(matches!(map.validate(&d), Err(UnderlayError::CapExceeded { .. })));
        let mut bad = AssociationMap::new();
        bad.assign(1, 9);
        assert!(matches!(bad.validate(&d), Err(UnderlayError::UnknownAp(9))));
        let mut partial = AssociationMap::new();
        partial.assign(1, 0);
        assert!(matches!(partial.validate(&d), Err(UnderlayError::Unassigned(2))));
    }
}
