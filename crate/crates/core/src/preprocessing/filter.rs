use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::data_model::VoyageSample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuasiSteadyParams {
    /// odd, at least 3
    pub window_len: usize,
    /// rev/min
    pub rpm_band: f64,
    /// knots
    pub speed_band: f64,
}

impl Default for QuasiSteadyParams {
    fn default() -> Self {
        Self {
            window_len: 5,
            rpm_band: 2.0,
            speed_band: 0.5,
        }
    }
}

/// Marks samples whose centred window shows at most `rpm_band` spread in shaft
/// rpm and at most `speed_band` spread in speed over ground. Samples without a
/// complete window are `false`.
pub fn quasi_steady_filter(samples: &[VoyageSample], params: &QuasiSteadyParams) -> Result<Vec<bool>> {
    let rpm: Vec<f64> = samples.iter().map(|s| s.shaft_rpm).collect();
    let gps: Vec<f64> = samples.iter().map(|s| s.gps_speed).collect();
    steady_mask(&rpm, &gps, params)
}

pub fn steady_mask(rpm: &[f64], speed: &[f64], params: &QuasiSteadyParams) -> Result<Vec<bool>> {
    let w = params.window_len;
    if w < 3 || w.is_multiple_of(2) {
        return Err(Error::Config(format!("quasi-steady window must be odd and >= 3, got {w}")));
    }
    if !(params.rpm_band > 0.0 && params.speed_band > 0.0) {
        return Err(Error::Config("quasi-steady bands must be positive".into()));
    }
    if w > rpm.len() {
        return Err(Error::InsufficientData {
            what: "quasi-steady window".into(),
            needed: w,
            got: rpm.len(),
        });
    }
    let rpm_range = window_ranges(rpm, w);
    let speed_range = window_ranges(speed, w);
    let half = w / 2;
    let mut mask = vec![false; rpm.len()];
    for (start, (r, s)) in rpm_range.iter().zip(&speed_range).enumerate() {
        mask[start + half] = *r <= params.rpm_band && *s <= params.speed_band;
    }
    Ok(mask)
}

/// `max - min` of every complete window of length `w`, by window start.
fn window_ranges(xs: &[f64], w: usize) -> Vec<f64> {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::with_capacity(xs.len() + 1 - w);
    for (i, &x) in xs.iter().enumerate() {
        while maxq.back().is_some_and(|&j| xs[j] <= x) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| xs[j] >= x) {
            minq.pop_back();
        }
        minq.push_back(i);
        if i + 1 >= w {
            let start = i + 1 - w;
            while maxq.front().is_some_and(|&j| j < start) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < start) {
                minq.pop_front();
            }
            out.push(xs[maxq[0]] - xs[minq[0]]);
        }
    }
    out
}
