use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::nan_as_null;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// NaN (serialized as null) when the truth column is constant
    #[serde(with = "nan_as_null")]
    pub r2: f64,
    pub r2_undefined: bool,
}

/// MAE, RMSE and R² = 1 - SSE/SST per column.
pub fn regression_metrics(truth: &DMatrix<f64>, pred: &DMatrix<f64>) -> Result<Vec<TargetMetrics>> {
    if truth.shape() != pred.shape() {
        return Err(Error::shape(format!("{:?}", truth.shape()), format!("{:?}", pred.shape())));
    }
    let m = truth.nrows();
    if m < 2 {
        return Err(Error::InsufficientData {
            what: "regression metrics".into(),
            needed: 2,
            got: m,
        });
    }
    Ok((0..truth.ncols())
        .map(|c| {
            let t = truth.column(c);
            let p = pred.column(c);
            let mean = t.mean();
            let mut abs = 0.0;
            let mut sse = 0.0;
            let mut sst = 0.0;
            for (a, b) in t.iter().zip(p.iter()) {
                abs += (a - b).abs();
                sse += (a - b).powi(2);
                sst += (a - mean).powi(2);
            }
            let undefined = sst == 0.0;
            TargetMetrics {
                mae: abs / m as f64,
                rmse: (sse / m as f64).sqrt(),
                r2: if undefined { f64::NAN } else { 1.0 - sse / sst },
                r2_undefined: undefined,
            }
        })
        .collect())
}
