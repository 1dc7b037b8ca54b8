//! Radio constants, log-distance path loss and the Shannon-style link rate.

use serde::{Deserialize, Serialize};

use super::deployment::{AccessPoint, Position, Station};

/// Physical-layer constants shared by every link in a deployment.
///
/// All values are configurable; the defaults are round indoor Wi-Fi numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    /// Regulatory cap on AP transmit power.
    pub max_tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub sensitivity_dbm: f64,
    pub bandwidth_mhz: f64,
    pub efficiency: f64,
    pub rate_cap_mbps: f64,
    /// Path loss at the 1 m reference distance.
    pub ref_loss_db: f64,
    pub path_loss_exponent: f64,
    pub channels: u32,
    pub demand_min_mbps: f64,
    pub demand_max_mbps: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            max_tx_power_dbm: 20.0,
            noise_floor_dbm: -95.0,
            sensitivity_dbm: -82.0,
            bandwidth_mhz: 20.0,
            efficiency: 0.8,
            rate_cap_mbps: 1024.0,
            ref_loss_db: 40.0,
            path_loss_exponent: 4.0,
            channels: 3,
            demand_min_mbps: 5.0,
            demand_max_mbps: 50.0,
        }
    }
}

/// One channel status report for a (STA, AP) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMeasurement {
    pub sta_id: u32,
    pub ap_id: u32,
    pub rssi_dbm: f64,
    pub snr_db: f64,
    pub link_rate_mbps: f64,
}

impl RadioConfig {
    /// Log-distance path loss, `L0 + 10·γ·log10(d)`, with `d` clamped to 1 m.
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(1.0);
        self.ref_loss_db + 10.0 * self.path_loss_exponent * d.log10()
    }

    pub fn rssi_dbm(&self, tx_power_dbm: f64, distance_m: f64) -> f64 {
        tx_power_dbm - self.path_loss_db(distance_m)
    }

    /// Rate achievable at `snr_db`, before the sensitivity cutoff.
    pub fn shannon_rate_mbps(&self, snr_db: f64) -> f64 {
        let linear = 10f64.powf(snr_db / 10.0);
        (self.bandwidth_mhz * (1.0 + linear).log2() * self.efficiency).min(self.rate_cap_mbps)
    }

    /// Distance at which a transmitter at `tx_power_dbm` falls to the sensitivity threshold.
    pub fn range_m(&self, tx_power_dbm: f64) -> f64 {
        let budget = tx_power_dbm - self.sensitivity_dbm - self.ref_loss_db;
        10f64.powf(budget / (10.0 * self.path_loss_exponent)).max(1.0)
    }

    pub fn measure_link(&self, ap: &AccessPoint, sta: &Station) -> LinkMeasurement {
        let rssi = self.rssi_dbm(ap.tx_power_dbm, ap.pos.distance(&sta.pos));
        let snr = rssi - self.noise_floor_dbm;
        let rate = if rssi < self.sensitivity_dbm {
            0.0
        } else {
            self.shannon_rate_mbps(snr)
        };
        LinkMeasurement {
            sta_id: sta.id,
            ap_id: ap.id,
            rssi_dbm: rssi,
            snr_db: snr,
            link_rate_mbps: rate,
        }
    }

    /// Whether a transmitter at `from` is heard above sensitivity at `to`.
    pub fn hears(&self, tx_power_dbm: f64, from: &Position, to: &Position) -> bool {
        self.rssi_dbm(tx_power_dbm, from.distance(to)) >= self.sensitivity_dbm
    }
}

/// Path loss with the default radio constants.
pub fn path_loss_db(distance_m: f64) -> f64 {
    RadioConfig::default().path_loss_db(distance_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap_at(x: f64) -> AccessPoint {
        AccessPoint {
            id: 0,
            pos: Position { x, y: 0.0 },
            channel: 1,
            tx_power_dbm: 20.0,
            max_stas: None,
        }
    }

    fn sta_at(x: f64) -> Station {
        Station {
            id: 1,
            pos: Position { x, y: 0.0 },
            demand_mbps: 10.0,
        }
    }

    #[test]
    fn path_loss_reference_points() {
        assert_eq!(path_loss_db(1.0), 40.0);
        assert_eq!(path_loss_db(10.0), 80.0);
        assert_eq!(path_loss_db(0.5), 40.0);
        assert_eq!(path_loss_db(0.0), 40.0);
    }

    #[test]
    fn link_at_ten_meters() {
        let radio = RadioConfig::default();
        let m = radio.measure_link(&ap_at(0.0), &sta_at(10.0));
        assert!((m.rssi_dbm - -60.0).abs() < 1e-12);
        assert!((m.snr_db - 35.0).abs() < 1e-12);
        assert_eq!(m.snr_db, m.rssi_dbm - radio.noise_floor_dbm);
    }

    #[test]
    fn zero_db_snr_gives_sixteen_mbps() {
        let radio = RadioConfig::default();
        assert!((radio.shannon_rate_mbps(0.0) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn below_sensitivity_has_zero_rate() {
        let radio = RadioConfig::default();
        // -20 - 40 log10(d) < -82  <=>  d > 10^(62/40) ~ 35.48 m
        let m = radio.measure_link(&ap_at(0.0), &sta_at(36.0));
        assert!(m.rssi_dbm < radio.sensitivity_dbm);
        assert_eq!(m.link_rate_mbps, 0.0);
        let m = radio.measure_link(&ap_at(0.0), &sta_at(35.0));
        assert!(m.link_rate_mbps > 0.0);
    }

    #[test]
    fn rate_capped() {
        let radio = RadioConfig {
            rate_cap_mbps: 100.0,
            ..RadioConfig::default()
        };
        assert_eq!(radio.shannon_rate_mbps(60.0), 100.0);
    }

    #[test]
    fn range_matches_sensitivity() {
        let radio = RadioConfig::default();
        let r = radio.range_m(20.0);
        assert!((radio.rssi_dbm(20.0, r) - radio.sensitivity_dbm).abs() < 1e-9);
    }
}
