use chrono::Duration;
use rand::Rng;
use rand_distr::StandardNormal;

use super::scenario::SynthScenario;
use crate::data_model::{HindcastGrid, HindcastSet};
use crate::Result;

/// First-order autoregressive field stepped in time, stationary with unit variance.
struct Ar1 {
    phi: f64,
    state: Vec<f64>,
}

impl Ar1 {
    fn new<R: Rng>(n: usize, phi: f64, rng: &mut R) -> Self {
        Self {
            phi,
            state: (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    fn step<R: Rng>(&mut self, rng: &mut R) {
        let innovation = (1.0 - self.phi * self.phi).sqrt();
        for v in &mut self.state {
            let e: f64 = rng.sample(StandardNormal);
            *v = self.phi * *v + innovation * e;
        }
    }
}

/// Hindcast grids over the scenario region (padded by one cell) and period.
/// Wind is a regional plus a local autoregressive component; waves follow
/// the wind with an added swell; currents are local only.
pub fn build_hindcast<R: Rng>(sc: &SynthScenario, rng: &mut R) -> Result<HindcastSet> {
    let w = &sc.weather;
    let [lat0, lat1, lon0, lon1] = sc.schedule.region;
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / w.grid_deg).ceil() as usize + 2;
        (0..=n).map(|i| lo - w.grid_deg + w.grid_deg * i as f64).collect()
    };
    let (lats, lons) = (axis(lat0, lat1), axis(lon0, lon1));
    let step = Duration::seconds((w.step_hours * 3600.0).round() as i64);
    let mut times = Vec::new();
    let mut t = sc.start - step;
    while t <= sc.end() + step {
        times.push(t);
        t += step;
    }
    let nodes = lats.len() * lons.len();
    let phi = w.persistence;
    let mut regional = Ar1::new(2, phi, rng);
    let mut wind_local = Ar1::new(2 * nodes, phi, rng);
    let mut current = Ar1::new(2 * nodes, phi, rng);
    let mut swell = Ar1::new(nodes, phi, rng);
    let mut dir_noise = Ar1::new(nodes, phi, rng);
    let names = [
        "wind_u",
        "wind_v",
        "current_u",
        "current_v",
        "wave_height",
        "wave_dir",
        "wave_period",
    ];
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len() * nodes); names.len()];
    for it in 0..times.len() {
        if it > 0 {
            regional.step(rng);
            wind_local.step(rng);
            current.step(rng);
            swell.step(rng);
            dir_noise.step(rng);
        }
        for k in 0..nodes {
            if w.calm {
                for (v, fill) in values.iter_mut().zip([0.0; 7]) {
                    v.push(fill);
                }
                continue;
            }
            let u = w.wind_regional_std * regional.state[0] + w.wind_local_std * wind_local.state[2 * k];
            let v = w.wind_regional_std * regional.state[1] + w.wind_local_std * wind_local.state[2 * k + 1];
            let speed = u.hypot(v);
            let hs = 0.25 + 0.02 * speed * speed + w.swell_std * swell.state[k].abs();
            // waves come from where the wind blows from
            let from = ((-u).atan2(-v).to_degrees() + 20.0 * dir_noise.state[k]).rem_euclid(360.0);
            let row = [
                u,
                v,
                w.current_std * current.state[2 * k],
                w.current_std * current.state[2 * k + 1],
                hs,
                from,
                3.5 + 2.5 * hs.sqrt(),
            ];
            for (col, x) in values.iter_mut().zip(row) {
                col.push(x);
            }
        }
    }
    let grids = names
        .iter()
        .zip(values)
        .map(|(name, v)| HindcastGrid::new(*name, times.clone(), lats.clone(), lons.clone(), v))
        .collect::<Result<Vec<_>>>()?;
    HindcastSet::new(grids)
}
