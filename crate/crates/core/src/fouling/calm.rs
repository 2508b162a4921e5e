use serde::{Deserialize, Serialize};

use super::resistance::ResistanceEstimator;
use crate::data_model::{ShipConfig, VoyageSample};
use crate::{Result, KNOT};

const CALM_WIND: f64 = 5.5;
const CALM_WAVE_HEIGHT: f64 = 1.0;
/// Corrected power never drops below this share of the measured power.
const POWER_FLOOR_FRACTION: f64 = 0.05;

pub fn near_calm(sample: &VoyageSample) -> bool {
    sample.long_wind_speed.hypot(sample.trans_wind_speed) < CALM_WIND && sample.sig_wave_height < CALM_WAVE_HEIGHT
}

pub fn near_calm_filter(samples: &[VoyageSample]) -> Vec<bool> {
    samples.iter().map(near_calm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPower {
    /// kW
    pub power: f64,
    pub floored: bool,
}

/// Shaft power with the wind and wave added-resistance share removed.
pub fn correct_power_near_calm(
    sample: &VoyageSample,
    ship: &ShipConfig,
    estimator: &dyn ResistanceEstimator,
) -> Result<CorrectedPower> {
    let eta = ship.propulsive_efficiency.at(sample.log_speed)?;
    let added = estimator.wind(sample, ship) + estimator.wave(sample, ship);
    Ok(apply_correction(sample.shaft_power, added, sample.log_speed, eta))
}

/// `power_kw - added_n * V / eta` with V in m/s, floored.
pub fn apply_correction(power_kw: f64, added_n: f64, log_speed_knots: f64, eta: f64) -> CorrectedPower {
    let corrected = power_kw - added_n * log_speed_knots * KNOT / eta / 1000.0;
    let floor = POWER_FLOOR_FRACTION * power_kw;
    if corrected < floor {
        CorrectedPower {
            power: floor,
            floored: true,
        }
    } else {
        CorrectedPower {
            power: corrected,
            floored: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::PropulsiveEfficiency;
    use crate::fouling::resistance::tests::{sample, ship};
    use crate::fouling::DefaultEstimator;

    #[test]
    fn calm_thresholds_are_strict() {
        let mut s = sample();
        s.sig_wave_height = 0.5;
        (s.long_wind_speed, s.trans_wind_speed) = (3.0, 4.0);
        assert!(near_calm(&s));
        (s.long_wind_speed, s.trans_wind_speed) = (5.0, 3.0);
        assert!(!near_calm(&s));
        (s.long_wind_speed, s.trans_wind_speed) = (1.0, 0.0);
        s.sig_wave_height = 1.0;
        assert!(!near_calm(&s));
    }

    #[test]
    fn correction_arithmetic() {
        assert_eq!(apply_correction(5000.0, 0.0, 12.0, 0.7).power, 5000.0);
        // 10 kN at 6 m/s with eta 0.7
        let knots = 6.0 / KNOT;
        let c = apply_correction(5000.0, 10_000.0, knots, 0.7);
        assert!((5000.0 - c.power - 10_000.0 * 6.0 / 0.7 / 1000.0).abs() < 1e-9);
        let floored = apply_correction(100.0, 1e6, 12.0, 0.7);
        assert!(floored.floored);
        assert_eq!(floored.power, 5.0);
    }

    #[test]
    fn zero_efficiency_is_config_error() {
        let mut sh = ship();
        sh.propulsive_efficiency = PropulsiveEfficiency::Constant(0.0);
        let r = correct_power_near_calm(&sample(), &sh, &DefaultEstimator);
        assert!(matches!(r, Err(crate::Error::Config(_))));
    }
}
