use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::calm::{correct_power_near_calm, near_calm};
use super::resistance::ResistanceEstimator;
use super::SAMPLE_HOURS;
use crate::data_model::{leg_index, CleaningEvent, ShipConfig, VoyageSample};
use crate::linalg::simple_linear_fit;
use crate::{Error, Result, STATIC_SPEED_KNOTS};

const MIN_FIT_POINTS: usize = 50;

/// Exponents of the generalized admiralty coefficient `Δ^m V^n / P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmiraltyModel {
    pub m_exp: f64,
    pub n_exp: f64,
    /// intercept of the log-log fit (`-ln C`)
    pub log_intercept: f64,
    pub r2: f64,
    pub residual_std: f64,
    pub n_samples: usize,
    /// true when `m_exp` was supplied rather than fitted
    pub m_fixed: bool,
}

impl AdmiraltyModel {
    pub fn coefficient(&self, displacement: f64, speed_knots: f64, power_kw: f64) -> f64 {
        displacement.powf(self.m_exp) * speed_knots.powf(self.n_exp) / power_kw
    }
}

/// Near-calm, corrected calm-water operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmiraltyPoint {
    pub index: usize,
    /// t
    pub displacement: f64,
    /// knots through water
    pub speed: f64,
    /// corrected shaft power, kW
    pub power: f64,
}

/// Selects near-calm samples (and `mask`) sailing above the static speed and
/// corrects their power for wind and waves. Floored corrections are dropped.
pub fn admiralty_points(
    samples: &[VoyageSample],
    mask: &[bool],
    ship: &ShipConfig,
    estimator: &dyn ResistanceEstimator,
) -> Result<Vec<AdmiraltyPoint>> {
    let mut out = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !mask.get(i).copied().unwrap_or(false) || !near_calm(s) || s.log_speed <= STATIC_SPEED_KNOTS {
            continue;
        }
        let c = correct_power_near_calm(s, ship, estimator)?;
        if c.floored || c.power <= 0.0 {
            continue;
        }
        out.push(AdmiraltyPoint {
            index: i,
            displacement: ship.displacement_at(s.mean_draft()),
            speed: s.log_speed,
            power: c.power,
        });
    }
    Ok(out)
}

fn usable(points: &[AdmiraltyPoint]) -> Result<Vec<&AdmiraltyPoint>> {
    let pts: Vec<&AdmiraltyPoint> = points
        .iter()
        .filter(|p| p.speed > STATIC_SPEED_KNOTS && p.power > 0.0 && p.displacement > 0.0)
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            what: "admiralty exponent fit".into(),
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    Ok(pts)
}

/// Least-squares fit of `ln P = m ln Δ + n ln V + c`.
pub fn fit_admiralty_exponents(points: &[AdmiraltyPoint]) -> Result<AdmiraltyModel> {
    let pts = usable(points)?;
    let n = pts.len() as f64;
    let ld: Vec<f64> = pts.iter().map(|p| p.displacement.ln()).collect();
    let lv: Vec<f64> = pts.iter().map(|p| p.speed.ln()).collect();
    let lp: Vec<f64> = pts.iter().map(|p| p.power.ln()).collect();
    let (md, mv, mp) = (ld.iter().sum::<f64>() / n, lv.iter().sum::<f64>() / n, lp.iter().sum::<f64>() / n);
    let (mut sdd, mut svv, mut sdv, mut sdp, mut svp, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..pts.len() {
        let (d, v, p) = (ld[i] - md, lv[i] - mv, lp[i] - mp);
        sdd += d * d;
        svv += v * v;
        sdv += d * v;
        sdp += d * p;
        svp += v * p;
        spp += p * p;
    }
    const FLAT: f64 = 1e-12;
    if sdd <= FLAT * n {
        return Err(Error::IllConditioned(
            "displacement is constant across the fit data; fix the displacement exponent instead".into(),
        ));
    }
    if svv <= FLAT * n {
        return Err(Error::IllConditioned("speed is constant across the fit data".into()));
    }
    let det = sdd * svv - sdv * sdv;
    if det <= 1e-10 * sdd * svv {
        return Err(Error::IllConditioned("log displacement and log speed are collinear".into()));
    }
    let m_exp = (sdp * svv - svp * sdv) / det;
    let n_exp = (svp * sdd - sdp * sdv) / det;
    let log_intercept = mp - m_exp * md - n_exp * mv;
    let sse: f64 = (0..pts.len())
        .map(|i| (lp[i] - m_exp * ld[i] - n_exp * lv[i] - log_intercept).powi(2))
        .sum();
    Ok(AdmiraltyModel {
        m_exp,
        n_exp,
        log_intercept,
        r2: if spp > 0.0 { 1.0 - sse / spp } else { f64::NAN },
        residual_std: (sse / (n - 3.0)).sqrt(),
        n_samples: pts.len(),
        m_fixed: false,
    })
}

/// Fits only the speed exponent, with the displacement exponent held at `m_exp`.
pub fn fit_admiralty_fixed_m(points: &[AdmiraltyPoint], m_exp: f64) -> Result<AdmiraltyModel> {
    let pts = usable(points)?;
    let lv: Vec<f64> = pts.iter().map(|p| p.speed.ln()).collect();
    let rest: Vec<f64> = pts.iter().map(|p| p.power.ln() - m_exp * p.displacement.ln()).collect();
    let (n_exp, log_intercept) =
        simple_linear_fit(&lv, &rest).ok_or_else(|| Error::IllConditioned("speed is constant across the fit data".into()))?;
    let n = pts.len() as f64;
    let mean = rest.iter().sum::<f64>() / n;
    let sse: f64 = lv.iter().zip(&rest).map(|(v, r)| (r - n_exp * v - log_intercept).powi(2)).sum();
    let sst: f64 = rest.iter().map(|r| (r - mean).powi(2)).sum();
    Ok(AdmiraltyModel {
        m_exp,
        n_exp,
        log_intercept,
        r2: if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN },
        residual_std: (sse / (n - 2.0)).sqrt(),
        n_samples: pts.len(),
        m_fixed: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoyageParams {
    /// a static spell at least this long (hours) separates voyages
    pub gap_hours: f64,
    pub min_samples: usize,
}

impl Default for VoyageParams {
    fn default() -> Self {
        Self {
            gap_hours: 6.0,
            min_samples: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoyagePoint {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// cumulative static hours when the voyage began
    pub static_hours: f64,
    pub mean_ac: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmiraltySeries {
    pub points: Vec<VoyagePoint>,
    /// voyages dropped for having too few valid samples
    pub skipped: usize,
}

/// One mean admiralty coefficient per voyage. `corrected_power[i]` is the
/// near-calm corrected power of sample `i`, or `None` where it is not usable.
pub fn voyage_admiralty_series(
    samples: &[VoyageSample],
    corrected_power: &[Option<f64>],
    model: &AdmiraltyModel,
    ship: &ShipConfig,
    params: &VoyageParams,
) -> AdmiraltySeries {
    struct Open {
        start: usize,
        last: usize,
        static_hours: f64,
        acs: Vec<f64>,
    }
    let mut points = Vec::new();
    let mut skipped = 0;
    let mut close = |v: Open, points: &mut Vec<VoyagePoint>| {
        if v.acs.len() >= params.min_samples.max(1) {
            points.push(VoyagePoint {
                start: samples[v.start].timestamp,
                end: samples[v.last].timestamp,
                static_hours: v.static_hours,
                mean_ac: v.acs.iter().sum::<f64>() / v.acs.len() as f64,
                n_samples: v.acs.len(),
            });
        } else {
            skipped += 1;
        }
    };
    let mut cumulative = 0.0;
    let mut run = 0usize;
    let mut open: Option<Open> = None;
    for (i, s) in samples.iter().enumerate() {
        if s.gps_speed < STATIC_SPEED_KNOTS {
            cumulative += SAMPLE_HOURS;
            run += 1;
            if run as f64 * SAMPLE_HOURS >= params.gap_hours {
                if let Some(v) = open.take() {
                    close(v, &mut points);
                }
            }
            continue;
        }
        run = 0;
        let v = open.get_or_insert(Open {
            start: i,
            last: i,
            static_hours: cumulative,
            acs: Vec::new(),
        });
        v.last = i;
        if let Some(p) = corrected_power.get(i).copied().flatten().filter(|p| *p > 0.0) {
            if s.log_speed > STATIC_SPEED_KNOTS {
                v.acs.push(model.coefficient(ship.displacement_at(s.mean_draft()), s.log_speed, p));
            }
        }
    }
    if let Some(v) = open.take() {
        close(v, &mut points);
    }
    AdmiraltySeries { points, skipped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegTrend {
    pub leg: usize,
    pub n_points: usize,
    /// admiralty-coefficient units per static hour
    pub slope: Option<f64>,
    /// fitted coefficient at the leg's first voyage
    pub start_ac: Option<f64>,
    /// growth rate in fraction per static hour, after replacement
    pub fgr: f64,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegTrends {
    pub legs: Vec<LegTrend>,
}

impl LegTrends {
    pub fn rates(&self) -> Vec<f64> {
        self.legs.iter().map(|l| l.fgr).collect()
    }
}

/// Per-leg fouling growth rate from the voyage admiralty trend. Legs whose
/// trend is flat, rising or undetermined take the smallest regular rate.
pub fn fit_leg_trends(series: &AdmiraltySeries, events: &[CleaningEvent]) -> Result<LegTrends> {
    let n_legs = events.len() + 1;
    let mut legs = Vec::with_capacity(n_legs);
    for leg in 0..n_legs {
        let pts: Vec<&VoyagePoint> = series
            .points
            .iter()
            .filter(|p| leg_index(events, p.start) == leg)
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.static_hours).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.mean_ac).collect();
        let fit = simple_linear_fit(&xs, &ys);
        let (slope, start_ac) = match fit {
            Some((s, c)) => (Some(s), Some(c + s * xs[0])),
            None => (None, None),
        };
        let raw = match (slope, start_ac) {
            (Some(s), Some(a)) if s < 0.0 && a > 0.0 => Some(-s / a),
            _ => None,
        };
        legs.push((
            LegTrend {
                leg,
                n_points: pts.len(),
                slope,
                start_ac,
                fgr: raw.unwrap_or(0.0),
                replaced: raw.is_none(),
            },
            raw,
        ));
    }
    let least = legs
        .iter()
        .filter_map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    if !least.is_finite() {
        return Err(Error::Degenerate("no leg shows a declining admiralty coefficient trend".into()));
    }
    Ok(LegTrends {
        legs: legs
            .into_iter()
            .map(|(mut l, raw)| {
                if raw.is_none() {
                    l.fgr = least;
                }
                l
            })
            .collect(),
    })
}
