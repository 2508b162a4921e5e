use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::data_model::{EventKind, PropulsiveEfficiency, ResistanceCoefficients, ShipConfig, Lookup1d, WettedSurfaceTable};
use crate::{Error, Result};

/// Everything the generator needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthScenario {
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub duration_days: f64,
    /// also holds the true resistance coefficients
    pub ship: ShipConfig,
    pub schedule: ScheduleParams,
    pub propulsion: PropulsionParams,
    pub fouling: FoulingRates,
    pub events: Vec<EventSpec>,
    pub weather: WeatherParams,
    pub noise: NoiseParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleParams {
    /// `[speed knots, weight]` pairs for cruise legs
    pub cruise_speeds: Vec<[f64; 2]>,
    /// cruise legs per voyage, each with its own drawn speed
    pub legs_per_voyage: usize,
    /// std of the slowly varying speed wander, knots
    pub speed_wander: f64,
    pub ramp_hours: f64,
    /// `[min, max]` days in port
    pub port_days: [f64; 2],
    pub laden_fraction: f64,
    pub laden_draft: f64,
    /// laden cruise speeds are the drawn ones times this
    pub laden_speed_factor: f64,
    /// mean trim by the stern in ballast; laden voyages sail on even keel
    pub ballast_trim: f64,
    pub trim_std: f64,
    /// `[lat_min, lat_max, lon_min, lon_max]` where ports are placed
    pub region: [f64; 4],
    pub min_voyage_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropulsionParams {
    pub rpm_per_knot: f64,
    /// relative rpm increase per metre of draft above ballast
    pub draft_factor: f64,
}

/// Fractional increase of calm-water resistance per static hour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoulingRates {
    pub hull: f64,
    pub propeller: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    /// requested time in days from the start; moved to the nearest port stay
    pub day: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherParams {
    pub grid_deg: f64,
    pub step_hours: f64,
    /// lag-one autocorrelation between grid time steps
    pub persistence: f64,
    pub wind_regional_std: f64,
    pub wind_local_std: f64,
    pub current_std: f64,
    pub swell_std: f64,
    /// no wind, waves or current at all
    pub calm: bool,
}

/// Standard deviations of the measurement noise per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub power_kw: f64,
    pub speed_kn: f64,
    pub rpm: f64,
    pub draft_m: f64,
    pub wind_ms: f64,
}

impl NoiseParams {
    pub fn none() -> Self {
        Self {
            power_kw: 0.0,
            speed_kn: 0.0,
            rpm: 0.0,
            draft_m: 0.0,
            wind_ms: 0.0,
        }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            power_kw: 20.0,
            speed_kn: 0.05,
            rpm: 0.2,
            draft_m: 0.02,
            wind_ms: 0.5,
        }
    }
}

impl Default for WeatherParams {
    fn default() -> Self {
        Self {
            grid_deg: 2.0,
            step_hours: 6.0,
            persistence: 0.9,
            wind_regional_std: 4.0,
            wind_local_std: 2.0,
            current_std: 0.25,
            swell_std: 0.3,
            calm: false,
        }
    }
}

impl Default for PropulsionParams {
    fn default() -> Self {
        Self {
            rpm_per_knot: 6.9,
            draft_factor: 0.015,
        }
    }
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            cruise_speeds: vec![[12.0, 0.15], [14.0, 0.35], [15.0, 0.5]],
            legs_per_voyage: 2,
            speed_wander: 0.15,
            ramp_hours: 2.0,
            port_days: [1.0, 3.0],
            laden_fraction: 0.3,
            laden_draft: 10.0,
            laden_speed_factor: 1.0,
            ballast_trim: 0.0,
            trim_std: 0.3,
            region: [0.0, 20.0, -40.0, -20.0],
            min_voyage_nm: 500.0,
        }
    }
}

impl Default for SynthScenario {
    fn default() -> Self {
        Self {
            seed: 7,
            start: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
            duration_days: 730.0,
            ship: synthetic_ship(),
            schedule: ScheduleParams::default(),
            propulsion: PropulsionParams::default(),
            fouling: FoulingRates {
                hull: 4e-5,
                propeller: 4e-5,
            },
            events: vec![
                EventSpec {
                    day: 180.0,
                    kind: EventKind::Propeller,
                },
                EventSpec {
                    day: 365.0,
                    kind: EventKind::HullAndPropeller,
                },
                EventSpec {
                    day: 545.0,
                    kind: EventKind::Propeller,
                },
            ],
            weather: WeatherParams::default(),
            noise: NoiseParams::default(),
        }
    }
}

/// A 200 m class cargo ship with the resistance coefficients the generator treats as truth.
pub fn synthetic_ship() -> ShipConfig {
    let mut surface = Vec::new();
    for d in 5..=12 {
        for t in -2..=2 {
            let (d, t) = (d as f64, t as f64);
            surface.push((d, t, 5200.0 + 420.0 * (d - 5.0) + 25.0 * t));
        }
    }
    ShipConfig {
        service_speed: 14.5,
        ncr_rpm: 100.0,
        design_speed: 15.5,
        ballast_draft: 7.0,
        water_density: 1025.0,
        wetted_surface: WettedSurfaceTable::new(&surface).expect("static table"),
        propulsive_efficiency: PropulsiveEfficiency::Constant(0.7),
        displacement: Lookup1d::new((3..=13).map(|d| (d as f64, 2000.0 + 2600.0 * d as f64)).collect()).expect("static table"),
        resistance: ResistanceCoefficients {
            calm_coeff: 11.0,
            trim_coeff: 0.0,
            air_density: 1.225,
            wind_drag_coeff: 0.8,
            frontal_area: 700.0,
            wave_coeff: 12000.0,
        },
    }
}

impl SynthScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic scenario: {m}")));
        self.ship.validate()?;
        if !(self.duration_days > 1.0) {
            return bad("duration must exceed one day");
        }
        let s = &self.schedule;
        if s.cruise_speeds.is_empty() || s.cruise_speeds.iter().any(|[v, w]| !(*v > 3.0 && *w > 0.0)) {
            return bad("cruise speeds must exceed 3 kn with positive weights");
        }
        if s.legs_per_voyage == 0 {
            return bad("a voyage needs at least one cruise leg");
        }
        if !(s.port_days[0] > 0.0 && s.port_days[1] >= s.port_days[0]) {
            return bad("port days must be a positive, ordered range");
        }
        if !(0.0..=1.0).contains(&s.laden_fraction) || !(s.laden_draft > 0.0) {
            return bad("laden fraction must be in [0, 1] and laden draft positive");
        }
        if !(s.laden_speed_factor > 0.0 && s.cruise_speeds.iter().all(|[v, _]| v * s.laden_speed_factor > 3.0)) {
            return bad("laden cruise speeds must exceed 3 kn");
        }
        if !s.ballast_trim.is_finite() {
            return bad("ballast trim must be finite");
        }
        if !(s.region[1] > s.region[0] && s.region[3] > s.region[2]) || s.region[0].abs().max(s.region[1].abs()) > 70.0 {
            return bad("region must be a non-empty box within 70 deg of the equator");
        }
        let non_negative = [
            ("speed wander", s.speed_wander),
            ("ramp hours", s.ramp_hours),
            ("trim std", s.trim_std),
            ("min voyage distance", s.min_voyage_nm),
            ("hull fouling rate", self.fouling.hull),
            ("propeller fouling rate", self.fouling.propeller),
            ("power noise", self.noise.power_kw),
            ("speed noise", self.noise.speed_kn),
            ("rpm noise", self.noise.rpm),
            ("draft noise", self.noise.draft_m),
            ("wind noise", self.noise.wind_ms),
            ("wind regional std", self.weather.wind_regional_std),
            ("wind local std", self.weather.wind_local_std),
            ("current std", self.weather.current_std),
            ("swell std", self.weather.swell_std),
        ];
        if let Some((name, _)) = non_negative.iter().find(|(_, v)| !(*v >= 0.0)) {
            return bad(&format!("{name} must be non-negative"));
        }
        if !(self.propulsion.rpm_per_knot > 0.0) {
            return bad("rpm per knot must be positive");
        }
        let w = &self.weather;
        if !(w.grid_deg > 0.0 && w.step_hours > 0.0 && (0.0..1.0).contains(&w.persistence)) {
            return bad("weather grid spacing must be positive and persistence in [0, 1)");
        }
        if let Some(e) = self.events.iter().find(|e| !(e.day > 0.0 && e.day < self.duration_days)) {
            return bad(&format!("event at day {} is outside the scenario", e.day));
        }
        Ok(())
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + chrono::Duration::seconds((self.duration_days * 86400.0).round() as i64)
    }
}
