use chrono::{DateTime, Utc};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::standardize::Scaling;
use crate::data_model::VoyageSample;
use crate::linalg::{matrix_serde, select_rows};
use crate::{Error, Result};

pub const LINEAR_INPUTS: [&str; 10] = [
    "shaft_rpm",
    "mean_draft",
    "trim_by_aft",
    "long_wind_speed",
    "trans_wind_speed",
    "long_current_speed",
    "sig_wave_height",
    "rel_mean_wave_dir",
    "mean_wave_period",
    "fgf",
];
pub const NONLINEAR_INPUTS: [&str; 3] = ["shaft_rpm_cubed", "mean_draft_sqrt", "sig_wave_height_squared"];
pub const LINEAR_TARGETS: [&str; 3] = ["shaft_power", "gps_speed", "log_speed"];
pub const NONLINEAR_TARGETS: [&str; 2] = ["gps_speed_cubed", "log_speed_cubed"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveDirEncoding {
    /// cosine of the relative angle, continuous across 0/360
    #[default]
    Cos,
    /// the angle in degrees as recorded
    Raw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub include_nonlinear: bool,
    pub wave_dir: WaveDirEncoding,
}

/// Inputs and targets in row-per-sample layout. Holds raw values until
/// standardized, after which `scaling` records the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    #[serde(with = "matrix_serde")]
    pub inputs: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub targets: DMatrix<f64>,
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
    pub input_nonlinear: Vec<bool>,
    pub target_nonlinear: Vec<bool>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub options: FeatureOptions,
    pub scaling: Option<Scaling>,
}

/// Input and target values for a single sample.
pub fn feature_row(sample: &VoyageSample, fgf: f64, options: &FeatureOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let draft = sample.mean_draft();
    if draft < 0.0 {
        return Err(Error::Domain(format!("negative mean draft {draft}")));
    }
    let wave_dir = match options.wave_dir {
        WaveDirEncoding::Cos => sample.rel_mean_wave_dir.to_radians().cos(),
        WaveDirEncoding::Raw => sample.rel_mean_wave_dir,
    };
    let mut x = vec![
        sample.shaft_rpm,
        draft,
        sample.trim_by_aft(),
        sample.long_wind_speed,
        sample.trans_wind_speed,
        sample.long_current_speed,
        sample.sig_wave_height,
        wave_dir,
        sample.mean_wave_period,
        fgf,
    ];
    let mut y = vec![sample.shaft_power, sample.gps_speed, sample.log_speed];
    if options.include_nonlinear {
        x.extend([sample.shaft_rpm.powi(3), draft.sqrt(), sample.sig_wave_height.powi(2)]);
        y.extend([sample.gps_speed.powi(3), sample.log_speed.powi(3)]);
    }
    Ok((x, y))
}

pub fn build_features(samples: &[VoyageSample], fgf_total: &[f64], options: FeatureOptions) -> Result<FeatureMatrix> {
    if samples.len() != fgf_total.len() {
        return Err(Error::shape(
            format!("{} fgf values", samples.len()),
            format!("{}", fgf_total.len()),
        ));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset("no samples for the feature matrix".into()));
    }
    let mut input_names: Vec<String> = LINEAR_INPUTS.iter().map(|s| s.to_string()).collect();
    let mut target_names: Vec<String> = LINEAR_TARGETS.iter().map(|s| s.to_string()).collect();
    if options.include_nonlinear {
        input_names.extend(NONLINEAR_INPUTS.iter().map(|s| s.to_string()));
        target_names.extend(NONLINEAR_TARGETS.iter().map(|s| s.to_string()));
    }
    let (n, k) = (input_names.len(), target_names.len());
    let mut inputs = DMatrix::zeros(samples.len(), n);
    let mut targets = DMatrix::zeros(samples.len(), k);
    for (i, (s, &f)) in samples.iter().zip(fgf_total).enumerate() {
        let (x, y) = feature_row(s, f, &options)?;
        for (j, v) in x.into_iter().enumerate() {
            inputs[(i, j)] = v;
        }
        for (j, v) in y.into_iter().enumerate() {
            targets[(i, j)] = v;
        }
    }
    Ok(FeatureMatrix {
        inputs,
        targets,
        input_nonlinear: (0..n).map(|j| j >= LINEAR_INPUTS.len()).collect(),
        target_nonlinear: (0..k).map(|j| j >= LINEAR_TARGETS.len()).collect(),
        input_names,
        target_names,
        timestamps: samples.iter().map(|s| s.timestamp).collect(),
        options,
        scaling: None,
    })
}

/// Column indices of `wanted` within `names`.
pub fn column_indices(names: &[String], wanted: &[String]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|w| {
            names
                .iter()
                .position(|n| n == w)
                .ok_or_else(|| Error::Schema(w.clone()))
        })
        .collect()
}

pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        self.inputs.nrows()
    }

    /// Copy restricted to the given rows, in order.
    pub fn rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            inputs: select_rows(&self.inputs, rows),
            targets: select_rows(&self.targets, rows),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            ..self.clone()
        }
    }

    pub fn linear_input_names(&self) -> Vec<String> {
        self.input_names
            .iter()
            .zip(&self.input_nonlinear)
            .filter(|(_, nl)| !**nl)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn linear_target_names(&self) -> Vec<String> {
        self.target_names
            .iter()
            .zip(&self.target_nonlinear)
            .filter(|(_, nl)| !**nl)
            .map(|(n, _)| n.clone())
            .collect()
    }
}
