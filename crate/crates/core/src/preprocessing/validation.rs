use serde::{Deserialize, Serialize};

use crate::data_model::{apparent_wind, VoyageSample};
use crate::linalg::{mean, nan_as_null};
use crate::{Error, Result, KNOT, STATIC_SPEED_KNOTS};

const MIN_PAIRS: usize = 10;

/// Agreement statistics between a hindcast quantity and its onboard counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub n: usize,
    /// mean of (hindcast - onboard)
    pub bias: f64,
    pub rmse: f64,
    #[serde(with = "nan_as_null")]
    pub correlation: f64,
    /// set when either series has zero variance
    pub correlation_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HindcastValidation {
    /// (gps - log) in m/s against hindcast longitudinal current
    pub current: PairStats,
    /// onboard relative wind speed against the hindcast apparent wind speed
    pub wind: Option<PairStats>,
}

pub fn pair_stats(hindcast: &[f64], onboard: &[f64]) -> PairStats {
    let n = hindcast.len();
    let diff: Vec<f64> = hindcast.iter().zip(onboard).map(|(h, o)| h - o).collect();
    let bias = mean(&diff);
    let rmse = (diff.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
    let (mh, mo) = (mean(hindcast), mean(onboard));
    let mut sho = 0.0;
    let mut shh = 0.0;
    let mut soo = 0.0;
    for (h, o) in hindcast.iter().zip(onboard) {
        sho += (h - mh) * (o - mo);
        shh += (h - mh).powi(2);
        soo += (o - mo).powi(2);
    }
    let undefined = shh <= 0.0 || soo <= 0.0;
    PairStats {
        n,
        bias,
        rmse,
        correlation: if undefined { f64::NAN } else { sho / (shh * soo).sqrt() },
        correlation_undefined: undefined,
    }
}

/// Compares hindcast-derived ship-frame environment against onboard
/// measurements on sailing samples.
pub fn validate_hindcast(samples: &[VoyageSample]) -> Result<HindcastValidation> {
    let sailing = samples.iter().filter(|s| s.gps_speed >= STATIC_SPEED_KNOTS);
    let (mut hc, mut ob) = (Vec::new(), Vec::new());
    let (mut hw, mut ow) = (Vec::new(), Vec::new());
    for s in sailing {
        hc.push(s.long_current_speed);
        ob.push((s.gps_speed - s.log_speed) * KNOT);
        if let Some(measured) = s.rel_wind_speed.filter(|v| v.is_finite()) {
            hw.push(apparent_wind(s.long_wind_speed, s.trans_wind_speed, s.gps_speed).0);
            ow.push(measured);
        }
    }
    if hc.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            what: "hindcast current validation".into(),
            needed: MIN_PAIRS,
            got: hc.len(),
        });
    }
    Ok(HindcastValidation {
        current: pair_stats(&hc, &ob),
        wind: (hw.len() >= MIN_PAIRS).then(|| pair_stats(&hw, &ow)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::VoyageSample;
    use chrono::{DateTime, Duration};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(i: usize, gps: f64, log: f64, current: f64) -> VoyageSample {
        VoyageSample {
            timestamp: DateTime::from_timestamp(0, 0).unwrap() + Duration::minutes(15 * i as i64),
            shaft_rpm: 80.0,
            shaft_power: 5000.0,
            gps_speed: gps,
            log_speed: log,
            draft_fore: 7.0,
            draft_aft: 7.0,
            latitude: 0.0,
            longitude: 0.0,
            heading: 0.0,
            cargo_weight: None,
            long_wind_speed: 0.0,
            trans_wind_speed: 0.0,
            long_current_speed: current,
            sig_wave_height: 0.5,
            rel_mean_wave_dir: 0.0,
            mean_wave_period: 5.0,
            rel_wind_speed: None,
            rel_wind_dir: None,
        }
    }

    #[test]
    fn exact_agreement() {
        let s: Vec<_> = (0..20)
            .map(|i| {
                let c = 0.1 * (i as f64 - 10.0);
                sample(i, 12.0 + c / KNOT, 12.0, c)
            })
            .collect();
        let r = validate_hindcast(&s).unwrap();
        assert!((r.current.correlation - 1.0).abs() < 1e-12);
        assert!(r.current.rmse < 1e-12);
        assert!(r.wind.is_none());
    }

    #[test]
    fn noisy_hindcast_rmse_tracks_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.2).unwrap();
        let s: Vec<_> = (0..2000)
            .map(|i| {
                let c = 0.5 * ((i as f64) * 0.01).sin();
                sample(i, 12.0 + c / KNOT, 12.0, c + noise.sample(&mut rng))
            })
            .collect();
        let r = validate_hindcast(&s).unwrap();
        assert!((r.current.rmse - 0.2).abs() < 0.04, "{}", r.current.rmse);
    }

    #[test]
    fn zero_current_correlation_is_undefined() {
        let s: Vec<_> = (0..20).map(|i| sample(i, 12.0, 12.0, 0.0)).collect();
        let r = validate_hindcast(&s).unwrap();
        assert!(r.current.correlation.is_nan());
        assert!(r.current.correlation_undefined);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"correlation\":null"));
    }

    #[test]
    fn too_few_pairs() {
        let s: Vec<_> = (0..9).map(|i| sample(i, 12.0, 12.0, 0.0)).collect();
        assert!(matches!(validate_hindcast(&s), Err(Error::InsufficientData { .. })));
    }
}
