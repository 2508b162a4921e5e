use crate::data_model::{ResistanceCoefficients, ShipConfig, VoyageSample};
use crate::KNOT;

/// Resistance components in newtons for one sample.
pub trait ResistanceEstimator: Sync {
    fn calm(&self, sample: &VoyageSample, ship: &ShipConfig) -> f64;
    fn wind(&self, sample: &VoyageSample, ship: &ShipConfig) -> f64;
    fn wave(&self, sample: &VoyageSample, ship: &ShipConfig) -> f64;
    fn others(&self, _sample: &VoyageSample, _ship: &ShipConfig) -> f64 {
        0.0
    }
}

/// Coefficient-based estimators read from [`ShipConfig::resistance`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultEstimator;

impl DefaultEstimator {
    pub fn calm_water(c: &ResistanceCoefficients, displacement: f64, log_speed_knots: f64, trim: f64) -> f64 {
        let v = log_speed_knots * KNOT;
        c.calm_coeff * displacement.powf(2.0 / 3.0) * v * v * (1.0 + c.trim_coeff * trim * trim)
    }

    /// Added wind resistance: the drag in the apparent wind less the drag in
    /// still air at the same speed over ground, so it vanishes without wind.
    pub fn wind_drag(c: &ResistanceCoefficients, gps_speed_knots: f64, long_wind: f64) -> f64 {
        let v = gps_speed_knots * KNOT;
        let u = v + long_wind;
        0.5 * c.air_density * c.wind_drag_coeff * c.frontal_area * (u * u.abs() - v * v.abs())
    }

    pub fn wave_added(c: &ResistanceCoefficients, hs: f64, rel_wave_dir_deg: f64) -> f64 {
        c.wave_coeff * hs * hs * (1.0 + rel_wave_dir_deg.to_radians().cos()) / 2.0
    }
}

impl ResistanceEstimator for DefaultEstimator {
    fn calm(&self, s: &VoyageSample, ship: &ShipConfig) -> f64 {
        Self::calm_water(
            &ship.resistance,
            ship.displacement_at(s.mean_draft()),
            s.log_speed,
            s.trim_by_aft(),
        )
    }

    fn wind(&self, s: &VoyageSample, ship: &ShipConfig) -> f64 {
        Self::wind_drag(&ship.resistance, s.gps_speed, s.long_wind_speed)
    }

    fn wave(&self, s: &VoyageSample, ship: &ShipConfig) -> f64 {
        Self::wave_added(&ship.resistance, s.sig_wave_height, s.rel_mean_wave_dir)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data_model::{PropulsiveEfficiency, Lookup1d, WettedSurfaceTable};
    use chrono::DateTime;

    pub(crate) fn ship() -> ShipConfig {
        ShipConfig {
            service_speed: 14.5,
            ncr_rpm: 100.0,
            design_speed: 15.5,
            ballast_draft: 7.0,
            water_density: 1025.0,
            wetted_surface: WettedSurfaceTable::new(&[
                (5.0, -2.0, 7000.0),
                (5.0, 2.0, 7100.0),
                (12.0, -2.0, 9000.0),
                (12.0, 2.0, 9100.0),
            ])
            .unwrap(),
            propulsive_efficiency: PropulsiveEfficiency::Constant(0.7),
            displacement: Lookup1d::new(vec![(5.0, 15000.0), (12.0, 33200.0)]).unwrap(),
            resistance: ResistanceCoefficients {
                calm_coeff: 11.0,
                trim_coeff: 0.01,
                air_density: 1.225,
                wind_drag_coeff: 0.8,
                frontal_area: 600.0,
                wave_coeff: 12000.0,
            },
        }
    }

    pub(crate) fn sample() -> VoyageSample {
        VoyageSample {
            timestamp: DateTime::from_timestamp(0, 0).unwrap(),
            shaft_rpm: 90.0,
            shaft_power: 5000.0,
            gps_speed: 14.0,
            log_speed: 13.5,
            draft_fore: 6.5,
            draft_aft: 7.5,
            latitude: 0.0,
            longitude: 0.0,
            heading: 0.0,
            cargo_weight: None,
            long_wind_speed: 4.0,
            trans_wind_speed: 1.0,
            long_current_speed: 0.25,
            sig_wave_height: 1.2,
            rel_mean_wave_dir: 60.0,
            mean_wave_period: 6.0,
            rel_wind_speed: None,
            rel_wind_dir: None,
        }
    }

    #[test]
    fn default_components_match_hand_formulas() {
        let (sh, s) = (ship(), sample());
        let e = DefaultEstimator;
        let disp: f64 = 15000.0 + (7.0 - 5.0) / 7.0 * 18200.0;
        let v = 13.5 * 1852.0 / 3600.0;
        let calm = 11.0 * disp.powf(2.0 / 3.0) * v * v * (1.0 + 0.01);
        assert!((e.calm(&s, &sh) - calm).abs() < 1e-9 * calm);
        let vg = 14.0 * 1852.0 / 3600.0;
        let u = vg + 4.0;
        let wind = 0.5 * 1.225 * 0.8 * 600.0 * (u * u - vg * vg);
        assert!((e.wind(&s, &sh) - wind).abs() < 1e-9 * wind);
        let wave = 12000.0 * 1.44 * 0.75;
        assert!((e.wave(&s, &sh) - wave).abs() < 1e-9 * wave);
    }

    #[test]
    fn strong_following_wind_pushes() {
        let c = ship().resistance;
        assert!(DefaultEstimator::wind_drag(&c, 10.0, -12.0) < 0.0);
        assert!(DefaultEstimator::wind_drag(&c, 10.0, -1.0) < 0.0);
    }

    #[test]
    fn no_wind_no_added_drag() {
        let c = ship().resistance;
        assert_eq!(DefaultEstimator::wind_drag(&c, 14.0, 0.0), 0.0);
    }
}
