use chrono::{DateTime, Duration, Utc};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{CalibratedModel, SpeedPathway};
use crate::data_model::VoyageSample;
use crate::fouling::FoulingSeries;
use crate::preprocessing::{feature_row, FeatureOptions, LINEAR_INPUTS, NONLINEAR_INPUTS};
use crate::{Error, Result};

/// Constant operating point in calm water, with only the fouling factor
/// varying along the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendScenario {
    pub rpm: f64,
    pub mean_draft: f64,
    pub timeline: Vec<DateTime<Utc>>,
    pub fgf: Vec<f64>,
}

/// Total fouling factor in effect at `t`: the value of the last sample at or
/// before it.
pub fn fgf_at(fouling: &FoulingSeries, t: DateTime<Utc>) -> Result<f64> {
    let (Some(first), Some(last)) = (fouling.timestamps.first(), fouling.timestamps.last()) else {
        return Err(Error::EmptyDataset("fouling series is empty".into()));
    };
    if t < *first || t > *last {
        return Err(Error::Validation(format!(
            "{t} lies outside the fouling series ({first} to {last})"
        )));
    }
    let i = fouling.timestamps.partition_point(|&s| s <= t);
    Ok(fouling.total[i - 1])
}

impl TrendScenario {
    pub fn new(rpm: f64, mean_draft: f64, timeline: Vec<DateTime<Utc>>, fouling: &FoulingSeries) -> Result<Self> {
        if timeline.is_empty() {
            return Err(Error::EmptyDataset("trend timeline is empty".into()));
        }
        if timeline.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("trend timeline must be strictly increasing".into()));
        }
        if !(rpm.is_finite() && mean_draft.is_finite() && mean_draft > 0.0) {
            return Err(Error::Validation(format!("invalid trend condition rpm={rpm}, draft={mean_draft}")));
        }
        let fgf = timeline.iter().map(|&t| fgf_at(fouling, t)).collect::<Result<_>>()?;
        Ok(Self {
            rpm,
            mean_draft,
            timeline,
            fgf,
        })
    }

    /// Evenly stepped timeline over the whole fouling series, ending on its
    /// last timestamp when that falls on a step.
    pub fn stepped(rpm: f64, mean_draft: f64, fouling: &FoulingSeries, step: Duration) -> Result<Self> {
        if step <= Duration::zero() {
            return Err(Error::Config("trend step must be positive".into()));
        }
        let (Some(&first), Some(&last)) = (fouling.timestamps.first(), fouling.timestamps.last()) else {
            return Err(Error::EmptyDataset("fouling series is empty".into()));
        };
        let mut timeline = Vec::new();
        let mut t = first;
        while t <= last {
            timeline.push(t);
            t += step;
        }
        Self::new(rpm, mean_draft, timeline, fouling)
    }

    /// Indices of the timeline points one step either side of `t`.
    pub fn bracket(&self, t: DateTime<Utc>) -> Result<(usize, usize)> {
        let before = self.timeline.partition_point(|&s| s < t);
        let after = self.timeline.partition_point(|&s| s <= t);
        if before == 0 || after >= self.timeline.len() {
            return Err(Error::Validation(format!("{t} is not inside the trend timeline")));
        }
        Ok((before - 1, after))
    }
}

/// A calm-water sample at the given operating point. Targets are zero.
pub fn calm_sample(timestamp: DateTime<Utc>, rpm: f64, mean_draft: f64, trim: f64) -> VoyageSample {
    VoyageSample {
        timestamp,
        shaft_rpm: rpm,
        shaft_power: 0.0,
        gps_speed: 0.0,
        log_speed: 0.0,
        draft_fore: mean_draft - 0.5 * trim,
        draft_aft: mean_draft + 0.5 * trim,
        latitude: 0.0,
        longitude: 0.0,
        heading: 0.0,
        cargo_weight: None,
        long_wind_speed: 0.0,
        trans_wind_speed: 0.0,
        long_current_speed: 0.0,
        sig_wave_height: 0.0,
        rel_mean_wave_dir: 0.0,
        mean_wave_period: 0.0,
        rel_wind_speed: None,
        rel_wind_dir: None,
    }
}

/// Full input column names, linear then non-linear.
pub fn all_input_names() -> Vec<String> {
    LINEAR_INPUTS.iter().chain(NONLINEAR_INPUTS.iter()).map(|s| s.to_string()).collect()
}

/// Raw input rows for calm samples with the given fouling factors.
/// Non-linear columns are always present so any model can pick its subset.
pub fn calm_rows(samples: &[(VoyageSample, f64)], wave_dir: crate::preprocessing::WaveDirEncoding) -> Result<(Vec<String>, DMatrix<f64>)> {
    let opts = FeatureOptions {
        include_nonlinear: true,
        wave_dir,
    };
    let names = all_input_names();
    let mut x = DMatrix::zeros(samples.len(), names.len());
    for (i, (s, fgf)) in samples.iter().enumerate() {
        let (row, _) = feature_row(s, *fgf, &opts)?;
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok((names, x))
}

/// Raw feature rows for the scenario, one per timeline point.
pub fn fabricate_trend_input(scenario: &TrendScenario, options: &FeatureOptions) -> Result<(Vec<String>, DMatrix<f64>)> {
    let samples: Vec<(VoyageSample, f64)> = scenario
        .timeline
        .iter()
        .zip(&scenario.fgf)
        .map(|(&t, &f)| (calm_sample(t, scenario.rpm, scenario.mean_draft, 0.0), f))
        .collect();
    calm_rows(&samples, options.wave_dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub name: String,
    pub values: Vec<f64>,
}

/// Model predictions along a trend scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPrediction {
    pub model: String,
    pub timeline: Vec<DateTime<Utc>>,
    pub fgf: Vec<f64>,
    /// every model target, destandardized
    pub targets: Vec<TrendSeries>,
    /// cube roots of the cubed speed targets, named `<target>_cbrt`
    pub derived: Vec<TrendSeries>,
    pub clamped_negative: usize,
}

pub fn predict_trends(model: &CalibratedModel, scenario: &TrendScenario, options: &FeatureOptions) -> Result<TrendPrediction> {
    let (names, x) = fabricate_trend_input(scenario, options)?;
    let y = model.predict(&names, &x)?;
    let targets = model
        .target_names()
        .iter()
        .enumerate()
        .map(|(j, n)| TrendSeries {
            name: n.clone(),
            values: y.column(j).iter().cloned().collect(),
        })
        .collect();
    let mut derived = Vec::new();
    let mut clamped_negative = 0;
    for p in model.pathways().into_iter().filter(|p| p.is_cubed()) {
        let j = model.target_index(p.target_name())?;
        let values = y
            .column(j)
            .iter()
            .map(|&v| {
                let (s, clamped) = p.to_speed(v);
                clamped_negative += clamped as usize;
                s
            })
            .collect();
        derived.push(TrendSeries {
            name: format!("{}_cbrt", p.target_name()),
            values,
        });
    }
    Ok(TrendPrediction {
        model: model.family().to_string(),
        timeline: scenario.timeline.clone(),
        fgf: scenario.fgf.clone(),
        targets,
        derived,
        clamped_negative,
    })
}

impl TrendPrediction {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.targets
            .iter()
            .chain(&self.derived)
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    /// Speed trend for a pathway, in knots.
    pub fn speed(&self, pathway: SpeedPathway) -> Option<&[f64]> {
        if pathway.is_cubed() {
            self.series(&format!("{}_cbrt", pathway.target_name()))
        } else {
            self.series(pathway.target_name())
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string(), "fgf".to_string()];
        header.extend(self.targets.iter().chain(&self.derived).map(|s| s.name.clone()));
        w.write_record(&header)?;
        for (i, t) in self.timeline.iter().enumerate() {
            let mut rec = vec![crate::data_model::format_timestamp(t), self.fgf[i].to_string()];
            rec.extend(self.targets.iter().chain(&self.derived).map(|s| s.values[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("trend csv", e))?;
        Ok(())
    }
}
