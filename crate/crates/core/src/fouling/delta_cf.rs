use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::resistance::ResistanceEstimator;
use crate::data_model::{ShipConfig, VoyageSample};
use crate::{Error, Result, KNOT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCfSample {
    pub timestamp: DateTime<Utc>,
    pub ct_data: f64,
    pub ct_emp: f64,
    pub delta_cf: f64,
    /// N
    pub r_calm: f64,
    pub r_wind: f64,
    pub r_wave: f64,
    pub r_others: f64,
    /// m²
    pub wetted_surface: f64,
    pub surface_extrapolated: bool,
}

/// Data-derived and empirical total resistance coefficients in SI units
/// (power W, speed m/s, resistance N). Returns `(ct_data, ct_emp)`.
pub fn delta_cf_si(power_w: f64, speed_ms: f64, eta: f64, rho: f64, surface: f64, resistance_n: f64) -> Result<(f64, f64)> {
    if !(speed_ms > 0.0) {
        return Err(Error::Domain(format!("speed must be positive for resistance coefficients, got {speed_ms}")));
    }
    let q = 0.5 * rho * surface * speed_ms * speed_ms;
    Ok((power_w * eta / (q * speed_ms), resistance_n / q))
}

/// Computes the friction-coefficient difference for one sailing sample.
pub fn delta_cf(sample: &VoyageSample, ship: &ShipConfig, estimator: &dyn ResistanceEstimator) -> Result<DeltaCfSample> {
    let eta = ship.propulsive_efficiency.at(sample.log_speed)?;
    let (surface, extrapolated) = ship.wetted_surface_at(sample.mean_draft(), sample.trim_by_aft());
    let r_calm = estimator.calm(sample, ship);
    let r_wind = estimator.wind(sample, ship);
    let r_wave = estimator.wave(sample, ship);
    let r_others = estimator.others(sample, ship);
    let (ct_data, ct_emp) = delta_cf_si(
        sample.shaft_power * 1000.0,
        sample.log_speed * KNOT,
        eta,
        ship.water_density,
        surface,
        r_calm + r_wind + r_wave + r_others,
    )?;
    Ok(DeltaCfSample {
        timestamp: sample.timestamp,
        ct_data,
        ct_emp,
        delta_cf: ct_data - ct_emp,
        r_calm,
        r_wind,
        r_wave,
        r_others,
        wetted_surface: surface,
        surface_extrapolated: extrapolated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPowerCf {
    /// kW at service speed in the ballast reference condition; negative is an improvement
    pub delta_power: f64,
    pub mean_before: f64,
    pub mean_after: f64,
    pub n_before: usize,
    pub n_after: usize,
}

/// Change in power demand implied by the ΔC_F shift across an event.
pub fn delta_power_from_delta_cf(
    series: &[DeltaCfSample],
    event_time: DateTime<Utc>,
    ship: &ShipConfig,
    window_days: f64,
    min_samples: usize,
) -> Result<DeltaPowerCf> {
    let window = window_duration(window_days);
    let before = window_values(series, |t| t >= event_time - window && t < event_time);
    let after = window_values(series, |t| t > event_time && t <= event_time + window);
    delta_power_from_sides(&before, &after, ship, min_samples)
}

/// Same as [`delta_power_from_delta_cf`] but compares the first and last
/// `window_days` of the series, both windows closed.
pub fn delta_power_start_end(
    series: &[DeltaCfSample],
    ship: &ShipConfig,
    window_days: f64,
    min_samples: usize,
) -> Result<DeltaPowerCf> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::EmptyDataset("empty ΔC_F series".into()));
    };
    let window = window_duration(window_days);
    let (t0, t1) = (first.timestamp, last.timestamp);
    let before = window_values(series, |t| t >= t0 && t <= t0 + window);
    let after = window_values(series, |t| t >= t1 - window && t <= t1);
    delta_power_from_sides(&before, &after, ship, min_samples)
}

fn window_duration(days: f64) -> Duration {
    Duration::seconds((days * 86400.0).round() as i64)
}

fn window_values(series: &[DeltaCfSample], keep: impl Fn(DateTime<Utc>) -> bool) -> Vec<f64> {
    series
        .iter()
        .filter(|s| keep(s.timestamp) && s.delta_cf.is_finite())
        .map(|s| s.delta_cf)
        .collect()
}

fn delta_power_from_sides(before: &[f64], after: &[f64], ship: &ShipConfig, min_samples: usize) -> Result<DeltaPowerCf> {
    for (name, v) in [("before", before), ("after", after)] {
        if v.len() < min_samples.max(1) {
            return Err(Error::InsufficientData {
                what: format!("ΔC_F window {name} the event"),
                needed: min_samples.max(1),
                got: v.len(),
            });
        }
    }
    let mean_before = before.iter().sum::<f64>() / before.len() as f64;
    let mean_after = after.iter().sum::<f64>() / after.len() as f64;
    let (s_ref, _) = ship.wetted_surface_at(ship.ballast_draft, 0.0);
    let v = ship.service_speed * KNOT;
    let eta = ship.propulsive_efficiency.at(ship.service_speed)?;
    Ok(DeltaPowerCf {
        delta_power: (mean_after - mean_before) * 0.5 * ship.water_density * s_ref * v.powi(3) / eta / 1000.0,
        mean_before,
        mean_after,
        n_before: before.len(),
        n_after: after.len(),
    })
}

pub fn write_delta_cf_csv<W: std::io::Write>(writer: W, series: &[DeltaCfSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "ct_data", "ct_emp", "delta_cf"])?;
    for s in series {
        w.write_record([
            crate::data_model::format_timestamp(&s.timestamp),
            s.ct_data.to_string(),
            s.ct_emp.to_string(),
            s.delta_cf.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<delta_cf csv>", e))?;
    Ok(())
}
