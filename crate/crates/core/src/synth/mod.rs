//! Synthetic voyage data with a known resistance model, fouling drift,
//! cleaning events, weather and sensor noise. Serves as ground truth for
//! end-to-end checks.

pub mod scenario;
pub mod schedule;
pub mod weather;

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use scenario::{
    synthetic_ship, EventSpec, FoulingRates, NoiseParams, PropulsionParams, ScheduleParams, SynthScenario, WeatherParams,
};
pub use schedule::{build_schedule, Phase, Voyage};
pub use weather::build_hindcast;

use crate::data_model::{apparent_wind, merge_hindcast, CleaningEvent, EventKind, HindcastSet, ShipConfig, VoyageSample};
use crate::fouling::{DefaultEstimator, SAMPLE_HOURS};
use crate::{Error, Result, KNOT, STATIC_SPEED_KNOTS};

const STREAM_SCHEDULE: u64 = 1;
const STREAM_WEATHER: u64 = 2;
const STREAM_WANDER: u64 = 3;
const STREAM_NOISE: u64 = 4;

/// Total resistance in N for a sample's speeds, loading and environment,
/// with calm-water resistance scaled by the fouling multiplier.
pub fn total_resistance(ship: &ShipConfig, s: &VoyageSample, multiplier: f64) -> f64 {
    let c = &ship.resistance;
    let disp = ship.displacement_at(s.mean_draft());
    let calm = DefaultEstimator::calm_water(c, disp, s.log_speed, s.trim_by_aft());
    let wind = DefaultEstimator::wind_drag(c, s.gps_speed, s.long_wind_speed);
    let wave = DefaultEstimator::wave_added(c, s.sig_wave_height, s.rel_mean_wave_dir);
    calm * multiplier + wind + wave
}

/// Shaft power in kW needed to overcome `resistance` N at the sample's speed.
pub fn shaft_power_kw(ship: &ShipConfig, s: &VoyageSample, resistance: f64) -> Result<f64> {
    if s.log_speed <= 0.0 {
        return Ok(0.0);
    }
    let eta = ship.propulsive_efficiency.at(s.log_speed)?;
    Ok((resistance * s.log_speed * KNOT / eta / 1000.0).max(0.0))
}

/// Calm-water power at service speed in the ballast, even-keel condition, kW.
pub fn reference_power_kw(ship: &ShipConfig, multiplier: f64) -> Result<f64> {
    let c = &ship.resistance;
    let disp = ship.displacement_at(ship.ballast_draft);
    let calm = DefaultEstimator::calm_water(c, disp, ship.service_speed, 0.0);
    let eta = ship.propulsive_efficiency.at(ship.service_speed)?;
    Ok(calm * multiplier * ship.service_speed * KNOT / eta / 1000.0)
}

/// Shaft rpm as a monotone function of speed through water and draft.
pub fn shaft_rpm(p: &PropulsionParams, log_speed: f64, mean_draft: f64, ballast_draft: f64) -> f64 {
    p.rpm_per_knot * log_speed * (1.0 + p.draft_factor * (mean_draft - ballast_draft))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSample {
    pub timestamp: DateTime<Utc>,
    /// static hours since the hull was last cleaned
    pub hull_hours: f64,
    pub propeller_hours: f64,
    pub multiplier: f64,
    /// kW at service speed, ballast, calm water
    pub service_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTruth {
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    /// penalty fractions removed by the event
    pub hull_penalty: f64,
    pub propeller_penalty: f64,
    pub delta_power_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    pub rates: FoulingRates,
    /// clean-hull calm-water power at service speed, ballast, kW
    pub reference_power_kw: f64,
    pub events: Vec<EventTruth>,
    /// service-power change from the first to the last sample, kW
    pub start_end_delta_kw: f64,
    #[serde(skip)]
    pub samples: Vec<TruthSample>,
}

pub struct SynthOutput {
    pub samples: Vec<VoyageSample>,
    pub events: Vec<CleaningEvent>,
    pub truth: SynthTruth,
    pub hindcast: HindcastSet,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Generates the scenario. Output is a pure function of the scenario.
pub fn generate(sc: &SynthScenario) -> Result<SynthOutput> {
    sc.validate()?;
    let (phases, events) = build_schedule(sc, &mut stream(sc.seed, STREAM_SCHEDULE))?;
    let hindcast = build_hindcast(sc, &mut stream(sc.seed, STREAM_WEATHER))?;
    let n = ((sc.end() - sc.start).num_seconds() as f64 / (SAMPLE_HOURS * 3600.0)).floor() as usize;
    let step = Duration::seconds((SAMPLE_HOURS * 3600.0) as i64);
    let ballast = sc.ship.ballast_draft;

    // positions, attitude and commanded speed
    let mut wander_rng = stream(sc.seed, STREAM_WANDER);
    let wander_phi: f64 = 0.95;
    let mut wander = 0.0;
    let mut samples = Vec::with_capacity(n);
    let mut commanded = Vec::with_capacity(n);
    let mut phase = 0;
    let mut heading = 0.0;
    let mut loading = (ballast, 0.0);
    for k in 0..n {
        let t = sc.start + step * k as i32;
        while phases[phase].end() <= t && phase + 1 < phases.len() {
            phase += 1;
        }
        let e: f64 = wander_rng.sample(StandardNormal);
        wander = wander_phi * wander + (1.0 - wander_phi * wander_phi).sqrt() * e;
        let (position, speed) = match &phases[phase] {
            Phase::Port { position, .. } => (*position, 0.0),
            Phase::Sail(v) => {
                heading = v.heading;
                loading = (v.draft, v.trim);
                let base = v.speed(t, sc.schedule.ramp_hours);
                let ramp = base / v.legs.iter().cloned().fold(0.0, f64::max);
                (v.position(t), (base + ramp * sc.schedule.speed_wander * wander).max(0.0))
            }
        };
        commanded.push(speed);
        samples.push(VoyageSample {
            timestamp: t,
            shaft_rpm: 0.0,
            shaft_power: 0.0,
            gps_speed: 0.0,
            log_speed: 0.0,
            draft_fore: loading.0 - 0.5 * loading.1,
            draft_aft: loading.0 + 0.5 * loading.1,
            latitude: position.0,
            longitude: position.1,
            heading,
            cargo_weight: None,
            long_wind_speed: 0.0,
            trans_wind_speed: 0.0,
            long_current_speed: 0.0,
            sig_wave_height: 0.0,
            rel_mean_wave_dir: 0.0,
            mean_wave_period: 0.0,
            rel_wind_speed: None,
            rel_wind_dir: None,
        });
    }
    merge_hindcast(&mut samples, &hindcast)?;

    // true speeds, fouling and power
    let rates = sc.fouling;
    let p_ref = reference_power_kw(&sc.ship, 1.0)?;
    let mut truth_samples = Vec::with_capacity(n);
    let (mut hull, mut prop) = (0.0, 0.0);
    let mut prev: Option<DateTime<Utc>> = None;
    for (s, &v) in samples.iter_mut().zip(&commanded) {
        s.log_speed = v;
        s.gps_speed = if v > 0.0 {
            (v + s.long_current_speed / KNOT).max(0.0)
        } else {
            0.0
        };
        let t = s.timestamp;
        let cleaned = events.iter().filter(|e| prev.is_none_or(|p| e.timestamp > p) && e.timestamp <= t);
        let (mut reset_hull, mut reset_prop) = (false, false);
        for e in cleaned {
            reset_hull |= e.kind.cleans_hull();
            reset_prop |= e.kind.cleans_propeller();
        }
        let dt = if s.gps_speed < STATIC_SPEED_KNOTS { SAMPLE_HOURS } else { 0.0 };
        hull = if reset_hull { 0.0 } else { hull + dt };
        prop = if reset_prop { 0.0 } else { prop + dt };
        let multiplier = 1.0 + rates.hull * hull + rates.propeller * prop;
        let resistance = total_resistance(&sc.ship, s, multiplier);
        s.shaft_power = shaft_power_kw(&sc.ship, s, resistance)?;
        s.shaft_rpm = shaft_rpm(&sc.propulsion, v, s.mean_draft(), ballast);
        s.cargo_weight = Some(sc.ship.displacement_at(s.mean_draft()) - sc.ship.displacement_at(ballast));
        truth_samples.push(TruthSample {
            timestamp: t,
            hull_hours: hull,
            propeller_hours: prop,
            multiplier,
            service_power: p_ref * multiplier,
        });
        prev = Some(t);
    }

    // measurement noise and the onboard anemometer
    let mut noise_rng = stream(sc.seed, STREAM_NOISE);
    let nz = sc.noise;
    let mut draw = |sd: f64| -> f64 {
        let e: f64 = noise_rng.sample(StandardNormal);
        sd * e
    };
    for s in &mut samples {
        let (wind, dir) = apparent_wind(s.long_wind_speed, s.trans_wind_speed, s.gps_speed);
        s.rel_wind_speed = Some((wind + draw(nz.wind_ms)).max(0.0));
        s.rel_wind_dir = Some(dir);
        let dd = (draw(nz.draft_m), draw(nz.draft_m));
        s.draft_fore += dd.0;
        s.draft_aft += dd.1;
        if s.log_speed > 0.0 {
            s.shaft_power = (s.shaft_power + draw(nz.power_kw)).max(0.0);
            s.shaft_rpm = (s.shaft_rpm + draw(nz.rpm)).max(0.0);
            s.log_speed = (s.log_speed + draw(nz.speed_kn)).max(0.0);
            s.gps_speed = (s.gps_speed + draw(nz.speed_kn)).max(0.0);
        }
    }

    let event_truth = events
        .iter()
        .map(|e| {
            let i = truth_samples.partition_point(|s| s.timestamp < e.timestamp);
            let before = i.checked_sub(1).map(|j| &truth_samples[j]);
            let (h, p) = before.map(|s| (s.hull_hours, s.propeller_hours)).unwrap_or((0.0, 0.0));
            let hull_penalty = if e.kind.cleans_hull() { rates.hull * h } else { 0.0 };
            let propeller_penalty = if e.kind.cleans_propeller() { rates.propeller * p } else { 0.0 };
            EventTruth {
                timestamp: e.timestamp,
                kind: e.kind,
                hull_penalty,
                propeller_penalty,
                delta_power_kw: -p_ref * (hull_penalty + propeller_penalty),
            }
        })
        .collect();
    let start_end_delta_kw = match (truth_samples.first(), truth_samples.last()) {
        (Some(a), Some(b)) => b.service_power - a.service_power,
        _ => 0.0,
    };
    Ok(SynthOutput {
        samples,
        events,
        truth: SynthTruth {
            seed: sc.seed,
            rates,
            reference_power_kw: p_ref,
            events: event_truth,
            start_end_delta_kw,
            samples: truth_samples,
        },
        hindcast,
    })
}

/// Closed-form ΔP (kW) at service speed for the event with this index.
pub fn truth_delta_power(truth: &SynthTruth, event: usize) -> Result<f64> {
    truth
        .events
        .get(event)
        .map(|e| e.delta_power_kw)
        .ok_or_else(|| Error::Validation(format!("no synthetic event with index {event}")))
}

impl SynthScenario {
    /// Copy with both fouling rates scaled, keeping their ratio, so that
    /// the event with index `event` has a true ΔP of `target_kw` (< 0).
    pub fn calibrated_to_event(&self, event: usize, target_kw: f64) -> Result<SynthScenario> {
        if !(target_kw < 0.0) {
            return Err(Error::Config("a cleaning event target must be a negative ΔP".into()));
        }
        let mut unit = self.clone();
        let (h, p) = (self.fouling.hull, self.fouling.propeller);
        let total = h + p;
        unit.fouling = if total > 0.0 {
            FoulingRates {
                hull: h / total,
                propeller: p / total,
            }
        } else {
            FoulingRates {
                hull: 0.5,
                propeller: 0.5,
            }
        };
        unit.noise = NoiseParams::none();
        let out = generate(&unit)?;
        let per_unit = truth_delta_power(&out.truth, event)?;
        if !(per_unit < 0.0) {
            return Err(Error::Validation(format!(
                "event {event} removes no accumulated fouling, cannot calibrate"
            )));
        }
        let scale = target_kw / per_unit;
        let mut calibrated = self.clone();
        calibrated.fouling = FoulingRates {
            hull: unit.fouling.hull * scale,
            propeller: unit.fouling.propeller * scale,
        };
        Ok(calibrated)
    }
}

impl SynthTruth {
    pub fn write_samples_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "hull_hours", "propeller_hours", "multiplier", "service_power"])?;
        for s in &self.samples {
            w.write_record([
                crate::data_model::format_timestamp(&s.timestamp),
                s.hull_hours.to_string(),
                s.propeller_hours.to_string(),
                s.multiplier.to_string(),
                s.service_power.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("truth csv", e))?;
        Ok(())
    }
}
