use chrono::{DateTime, Utc};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{CalibratedModel, SpeedPathway, POWER_TARGET};
use super::trend::{calm_rows, calm_sample, TrendScenario};
use crate::ann::predict_mc;
use crate::linalg::interp_linear;
use crate::preprocessing::WaveDirEncoding;
use crate::{Error, Result};

/// Loading and fouling state a calm-water curve is predicted for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveCondition {
    pub timestamp: DateTime<Utc>,
    pub mean_draft: f64,
    pub trim: f64,
    pub fgf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveOptions {
    pub rpm_min: f64,
    pub rpm_max: f64,
    pub n_points: usize,
    pub mc_passes: usize,
    pub mc_seed: u64,
    /// normal quantile for the band half-width
    pub z: f64,
    pub wave_dir: WaveDirEncoding,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            rpm_min: 60.0,
            rpm_max: 105.0,
            n_points: 25,
            mc_passes: 1000,
            mc_seed: 0,
            z: 1.96,
            wave_dir: WaveDirEncoding::Cos,
        }
    }
}

impl CurveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rpm_min.is_finite() && self.rpm_max > self.rpm_min) {
            return Err(Error::Config(format!(
                "curve rpm range [{}, {}] is empty",
                self.rpm_min, self.rpm_max
            )));
        }
        if self.n_points < 2 {
            return Err(Error::Config("a curve needs at least 2 points".into()));
        }
        if self.mc_passes == 0 {
            return Err(Error::Config("mc_passes must be positive".into()));
        }
        Ok(())
    }

    pub fn rpm_grid(&self) -> Vec<f64> {
        let step = (self.rpm_max - self.rpm_min) / (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| self.rpm_min + step * i as f64).collect()
    }
}

/// Predicted power against predicted speed, sorted by speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePrediction {
    pub model: String,
    pub pathway: SpeedPathway,
    pub condition: CurveCondition,
    pub rpm: Vec<f64>,
    /// knots
    pub speed: Vec<f64>,
    /// kW
    pub power: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub clamped_negative: usize,
    pub warnings: Vec<String>,
}

/// Raw predictions over the rpm sweep, shared by every pathway of one model.
struct Sweep {
    rpm: Vec<f64>,
    mean: DMatrix<f64>,
    band: Option<(DMatrix<f64>, DMatrix<f64>)>,
    warnings: Vec<String>,
}

fn sweep(model: &CalibratedModel, condition: &CurveCondition, opts: &CurveOptions) -> Result<Sweep> {
    opts.validate()?;
    let rpm = opts.rpm_grid();
    let samples: Vec<_> = rpm
        .iter()
        .map(|&n| (calm_sample(condition.timestamp, n, condition.mean_draft, condition.trim), condition.fgf))
        .collect();
    let (names, x) = calm_rows(&samples, opts.wave_dir)?;
    let mut warnings = Vec::new();
    if let Some(j) = model.input_names().iter().position(|n| n == "shaft_rpm") {
        let sx = &model.scaling().x;
        let (mu, sd) = (sx.means[j], sx.stds[j]);
        if (opts.rpm_min - mu).abs() > 3.0 * sd || (opts.rpm_max - mu).abs() > 3.0 * sd {
            warnings.push(format!(
                "rpm range [{}, {}] reaches beyond 3 sd of the training rpm ({mu:.1} ± {sd:.1})",
                opts.rpm_min, opts.rpm_max
            ));
        }
    }
    match model {
        CalibratedModel::Ann(mlp) => {
            let xs = mlp.scaling.x.apply(&model.select_inputs(&names, &x)?);
            let mc = predict_mc(mlp, &xs, opts.mc_passes, opts.mc_seed)?;
            let (mean, lo, hi) = mc.to_raw(mlp, opts.z);
            Ok(Sweep {
                rpm,
                mean,
                band: Some((lo, hi)),
                warnings,
            })
        }
        _ => Ok(Sweep {
            rpm,
            mean: model.predict(&names, &x)?,
            band: None,
            warnings,
        }),
    }
}

fn curve_from_sweep(model: &CalibratedModel, sweep: &Sweep, condition: &CurveCondition, pathway: SpeedPathway) -> Result<CurvePrediction> {
    let jp = model.target_index(POWER_TARGET)?;
    let js = model.target_index(pathway.target_name())?;
    let mut clamped_negative = 0;
    let mut points: Vec<(f64, usize)> = (0..sweep.rpm.len())
        .map(|i| {
            let (v, clamped) = pathway.to_speed(sweep.mean[(i, js)]);
            clamped_negative += clamped as usize;
            (v, i)
        })
        .collect();
    let mut warnings = sweep.warnings.clone();
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        warnings.push("predicted speed is not monotone in rpm".into());
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let before = points.len();
    points.dedup_by(|b, a| b.0 == a.0);
    if points.len() < before {
        warnings.push(format!("{} points with repeated speed dropped", before - points.len()));
    }
    if clamped_negative > 0 {
        warnings.push(format!("{clamped_negative} negative cubed-speed predictions clamped to 0"));
    }
    let pick = |m: &DMatrix<f64>| points.iter().map(|&(_, i)| m[(i, jp)]).collect::<Vec<_>>();
    Ok(CurvePrediction {
        model: model.family().to_string(),
        pathway,
        condition: *condition,
        rpm: points.iter().map(|&(_, i)| sweep.rpm[i]).collect(),
        speed: points.iter().map(|&(v, _)| v).collect(),
        power: pick(&sweep.mean),
        lower: sweep.band.as_ref().map(|(lo, _)| pick(lo)),
        upper: sweep.band.as_ref().map(|(_, hi)| pick(hi)),
        clamped_negative,
        warnings,
    })
}

/// Calm-water speed-power curve for one speed pathway.
pub fn predict_calm_water_curve(
    model: &CalibratedModel,
    condition: &CurveCondition,
    pathway: SpeedPathway,
    opts: &CurveOptions,
) -> Result<CurvePrediction> {
    let s = sweep(model, condition, opts)?;
    curve_from_sweep(model, &s, condition, pathway)
}

/// Curves for every pathway the model offers, from a single sweep.
pub fn predict_calm_water_curves(model: &CalibratedModel, condition: &CurveCondition, opts: &CurveOptions) -> Result<Vec<CurvePrediction>> {
    let s = sweep(model, condition, opts)?;
    model
        .pathways()
        .into_iter()
        .map(|p| curve_from_sweep(model, &s, condition, p))
        .collect()
}

impl CurvePrediction {
    /// Power read off the curve at `speed` knots, with an extrapolation flag.
    pub fn power_at(&self, speed: f64) -> (f64, bool) {
        interp_linear(&self.speed, &self.power, speed)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rpm", "speed", "power", "lo", "hi"])?;
        for i in 0..self.speed.len() {
            let band = |b: &Option<Vec<f64>>| b.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
            w.write_record([
                self.rpm[i].to_string(),
                self.speed[i].to_string(),
                self.power[i].to_string(),
                band(&self.lower),
                band(&self.upper),
            ])?;
        }
        w.flush().map_err(|e| Error::io("curve csv", e))?;
        Ok(())
    }
}

/// Power change at one speed between two curves of the same pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDelta {
    pub pathway: SpeedPathway,
    pub before_kw: f64,
    pub after_kw: f64,
    /// after minus before; negative means less power is needed
    pub delta_kw: f64,
    pub extrapolated: bool,
    pub warnings: Vec<String>,
}

fn deltas(before: &[CurvePrediction], after: &[CurvePrediction], speed: f64) -> Vec<PowerDelta> {
    before
        .iter()
        .zip(after)
        .map(|(b, a)| {
            let (pb, eb) = b.power_at(speed);
            let (pa, ea) = a.power_at(speed);
            let mut warnings: Vec<String> = b.warnings.iter().map(|w| format!("before: {w}")).collect();
            warnings.extend(a.warnings.iter().map(|w| format!("after: {w}")));
            PowerDelta {
                pathway: b.pathway,
                before_kw: pb,
                after_kw: pa,
                delta_kw: pa - pb,
                extrapolated: eb || ea,
                warnings,
            }
        })
        .collect()
}

/// Per-pathway ΔP at `speed` between two conditions. Both curves of an MC
/// model use the same seed so that sampling noise largely cancels.
pub fn delta_power_between(
    model: &CalibratedModel,
    before: &CurveCondition,
    after: &CurveCondition,
    speed: f64,
    opts: &CurveOptions,
) -> Result<(Vec<PowerDelta>, [Vec<CurvePrediction>; 2])> {
    let (cb, ca) = rayon::join(
        || predict_calm_water_curves(model, before, opts),
        || predict_calm_water_curves(model, after, opts),
    );
    let (cb, ca) = (cb?, ca?);
    Ok((deltas(&cb, &ca, speed), [cb, ca]))
}

/// Conditions one timeline step before and after `event_time`.
pub fn event_conditions(scenario: &TrendScenario, event_time: DateTime<Utc>) -> Result<(CurveCondition, CurveCondition)> {
    let (ib, ia) = scenario.bracket(event_time)?;
    let cond = |i: usize| CurveCondition {
        timestamp: scenario.timeline[i],
        mean_draft: scenario.mean_draft,
        trim: 0.0,
        fgf: scenario.fgf[i],
    };
    Ok((cond(ib), cond(ia)))
}

pub fn delta_power_at_event(
    model: &CalibratedModel,
    scenario: &TrendScenario,
    event_time: DateTime<Utc>,
    service_speed: f64,
    opts: &CurveOptions,
) -> Result<Vec<PowerDelta>> {
    let (b, a) = event_conditions(scenario, event_time)?;
    Ok(delta_power_between(model, &b, &a, service_speed, opts)?.0)
}

/// ΔP for many condition pairs in parallel, in input order.
pub fn delta_power_batch(
    model: &CalibratedModel,
    pairs: &[(CurveCondition, CurveCondition)],
    speed: f64,
    opts: &CurveOptions,
) -> Result<Vec<Vec<PowerDelta>>> {
    pairs
        .par_iter()
        .map(|(b, a)| delta_power_between(model, b, a, speed, opts).map(|r| r.0))
        .collect()
}
