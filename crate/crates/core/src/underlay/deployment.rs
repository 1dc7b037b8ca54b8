//! Seeded WLAN scenario generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::radio::RadioConfig;
use super::UnderlayError;

/// Number of uniform draws tried per station before the scenario is declared infeasible.
pub const MAX_PLACEMENT_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub id: u32,
    pub pos: Position,
    pub channel: u32,
    pub tx_power_dbm: f64,
    /// Optional policy cap on associated stations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stas: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: u32,
    pub pos: Position,
    pub demand_mbps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityClass {
    Sparse,
    Medium,
    Dense,
}

impl DensityClass {
    pub const ALL: [DensityClass; 3] = [DensityClass::Sparse, DensityClass::Medium, DensityClass::Dense];

    /// (APs, STAs) per 100 m × 100 m.
    pub fn counts(self) -> (usize, usize) {
        match self {
            DensityClass::Sparse => (2, 10),
            DensityClass::Medium => (4, 25),
            DensityClass::Dense => (8, 50),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DensityClass::Sparse => "sparse",
            DensityClass::Medium => "medium",
            DensityClass::Dense => "dense",
        }
    }
}

impl fmt::Display for DensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DensityClass {
    type Err = UnderlayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sparse" => Ok(DensityClass::Sparse),
            "medium" => Ok(DensityClass::Medium),
            "dense" => Ok(DensityClass::Dense),
            other => Err(UnderlayError::UnknownDensity(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub aps: Vec<AccessPoint>,
    pub stas: Vec<Station>,
    pub side: f64,
    pub seed: u64,
    pub density_class: DensityClass,
    pub radio: RadioConfig,
}

impl Deployment {
    pub fn ap(&self, id: u32) -> Option<&AccessPoint> {
        self.aps.iter().find(|a| a.id == id)
    }

    pub fn sta(&self, id: u32) -> Option<&Station> {
        self.stas.iter().find(|s| s.id == id)
    }

    /// Number of other APs on the same channel heard above sensitivity (carrier-sense neighbors).
    pub fn cochannel_neighbors(&self, ap: &AccessPoint) -> usize {
        self.aps
            .iter()
            .filter(|b| b.id != ap.id && b.channel == ap.channel)
            .filter(|b| self.radio.hears(b.tx_power_dbm, &b.pos, &ap.pos))
            .count()
    }

    /// Checks the structural invariants: non-empty, unique disjoint ids, positions in the box,
    /// channels in range, tx power under the cap, positive demands and full coverage.
    pub fn validate(&self) -> Result<(), UnderlayError> {
        if self.aps.is_empty() || self.stas.is_empty() {
            return Err(UnderlayError::InvalidDeployment(
                "need at least one AP and one STA".into(),
            ));
        }
        let mut ids: Vec<u32> = self
            .aps
            .iter()
            .map(|a| a.id)
            .chain(self.stas.iter().map(|s| s.id))
            .collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(UnderlayError::InvalidDeployment("duplicate node id".into()));
        }
        let in_box = |p: &Position| {
            p.x.is_finite() && p.y.is_finite() && (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
        };
        for ap in &self.aps {
            if !in_box(&ap.pos) {
                return Err(UnderlayError::InvalidDeployment(format!(
                    "AP {} outside the box",
                    ap.id
                )));
            }
            if ap.channel == 0 || ap.channel > self.radio.channels {
                return Err(UnderlayError::InvalidDeployment(format!(
                    "AP {} on channel {}",
                    ap.id, ap.channel
                )));
            }
            if ap.tx_power_dbm > self.radio.max_tx_power_dbm {
                return Err(UnderlayError::InvalidDeployment(format!(
                    "AP {} exceeds the tx power cap",
                    ap.id
                )));
            }
        }
        for sta in &self.stas {
            if !in_box(&sta.pos) {
                return Err(UnderlayError::InvalidDeployment(format!(
                    "STA {} outside the box",
                    sta.id
                )));
            }
            if !(sta.demand_mbps > 0.0) {
                return Err(UnderlayError::InvalidDeployment(format!(
                    "STA {} has non-positive demand",
                    sta.id
                )));
            }
            if !self
                .aps
                .iter()
                .any(|ap| self.radio.hears(ap.tx_power_dbm, &ap.pos, &sta.pos))
            {
                return Err(UnderlayError::NoCoverage(sta.id));
            }
        }
        Ok(())
    }
}

/// Generates a deployment with the default radio constants.
pub fn generate_deployment(density: DensityClass, side_m: f64, seed: u64) -> Result<Deployment, UnderlayError> {
    generate_deployment_with(density, side_m, seed, &RadioConfig::default())
}

/// Node counts scale with area relative to the 100 m reference box.
fn scaled_counts(density: DensityClass, side_m: f64) -> (usize, usize) {
    let (aps, stas) = density.counts();
    let scale = (side_m / 100.0).powi(2);
    let scaled = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    (scaled(aps), scaled(stas))
}

/// AP ids are `0..n_aps`; STA ids follow on from `n_aps`.
///
/// A station position that hears no AP is redrawn, up to [`MAX_PLACEMENT_RETRIES`] times.
pub fn generate_deployment_with(
    density: DensityClass,
    side_m: f64,
    seed: u64,
    radio: &RadioConfig,
) -> Result<Deployment, UnderlayError> {
    if !(side_m > 0.0) || !side_m.is_finite() {
        return Err(UnderlayError::InvalidSide(side_m));
    }
    if radio.channels == 0 {
        return Err(UnderlayError::InvalidDeployment("channel set is empty".into()));
    }
    if radio.tx_power_dbm > radio.max_tx_power_dbm {
        return Err(UnderlayError::InvalidDeployment("tx power above regulatory cap".into()));
    }
    if !(radio.demand_min_mbps > 0.0) || radio.demand_max_mbps < radio.demand_min_mbps {
        return Err(UnderlayError::InvalidDeployment("bad demand range".into()));
    }
    let (n_aps, n_stas) = scaled_counts(density, side_m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| Position {
        x: rng.gen_range(0.0..=side_m),
        y: rng.gen_range(0.0..=side_m),
    };

    let aps: Vec<AccessPoint> = (0..n_aps)
        .map(|i| AccessPoint {
            id: i as u32,
            pos: draw(&mut rng),
            channel: (i as u32 % radio.channels) + 1,
            tx_power_dbm: radio.tx_power_dbm,
            max_stas: None,
        })
        .collect();

    let mut stas = Vec::with_capacity(n_stas);
    for j in 0..n_stas {
        let id = (n_aps + j) as u32;
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_RETRIES {
            let pos = draw(&mut rng);
            if aps.iter().any(|ap| radio.hears(ap.tx_power_dbm, &ap.pos, &pos)) {
                placed = Some(pos);
                break;
            }
        }
        let pos = placed.ok_or(UnderlayError::InfeasibleScenario {
            sta_id: id,
            retries: MAX_PLACEMENT_RETRIES,
        })?;
        let demand_mbps = if radio.demand_max_mbps > radio.demand_min_mbps {
            rng.gen_range(radio.demand_min_mbps..=radio.demand_max_mbps)
        } else {
            radio.demand_min_mbps
        };
        stas.push(Station { id, pos, demand_mbps });
    }

    Ok(Deployment {
        aps,
        stas,
        side: side_m,
        seed,
        density_class: density,
        radio: *radio,
    })
}
