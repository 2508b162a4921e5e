use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::{Error, Result};

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(names: Vec<String>) -> Self {
        let n = names.len();
        Self {
            names,
            means: vec![0.0; n],
            stds: vec![1.0; n],
        }
    }

    pub fn fit(m: &DMatrix<f64>, rows: &[usize], names: &[String]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset("no training rows to fit the standardizer".into()));
        }
        let count = rows.len() as f64;
        let mut means = Vec::with_capacity(m.ncols());
        let mut stds = Vec::with_capacity(m.ncols());
        for c in 0..m.ncols() {
            let mu = rows.iter().map(|&r| m[(r, c)]).sum::<f64>() / count;
            let var = rows.iter().map(|&r| (m[(r, c)] - mu).powi(2)).sum::<f64>() / count;
            let sd = var.sqrt();
            if !(sd > 1e-12 * mu.abs().max(1.0)) {
                return Err(Error::ZeroVariance(names[c].clone()));
            }
            means.push(mu);
            stds.push(sd);
        }
        Ok(Self {
            names: names.to_vec(),
            means,
            stds,
        })
    }

    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] - self.means[c]) / self.stds[c])
    }

    pub fn invert(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * self.stds[c] + self.means[c])
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(c, v)| (v - self.means[c]) / self.stds[c])
            .collect()
    }

    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(c, v)| v * self.stds[c] + self.means[c])
            .collect()
    }

    /// Restriction to the given columns, in order.
    pub fn subset(&self, cols: &[usize]) -> Self {
        Self {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            means: cols.iter().map(|&c| self.means[c]).collect(),
            stds: cols.iter().map(|&c| self.stds[c]).collect(),
        }
    }
}

/// Input and target standardizers travelling with a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub x: Standardizer,
    pub y: Standardizer,
}

impl Scaling {
    pub fn identity(n_inputs: usize, n_targets: usize) -> Self {
        Self {
            x: Standardizer::identity((0..n_inputs).map(|i| format!("x{i}")).collect()),
            y: Standardizer::identity((0..n_targets).map(|i| format!("y{i}")).collect()),
        }
    }

    /// Returns a standardized copy of `fm`.
    pub fn apply(&self, fm: &FeatureMatrix) -> FeatureMatrix {
        FeatureMatrix {
            inputs: self.x.apply(&fm.inputs),
            targets: self.y.apply(&fm.targets),
            scaling: Some(self.clone()),
            ..fm.clone()
        }
    }
}

/// Fits means and standard deviations on `train_rows` only.
pub fn fit_standardizer(fm: &FeatureMatrix, train_rows: &[usize]) -> Result<Scaling> {
    Ok(Scaling {
        x: Standardizer::fit(&fm.inputs, train_rows, &fm.input_names)?,
        y: Standardizer::fit(&fm.targets, train_rows, &fm.target_names)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn standardizes_simple_column() {
        let m = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let s = Standardizer::fit(&m, &[0, 1, 2], &names(1)).unwrap();
        let z = s.apply(&m);
        let sd = (2.0f64 / 3.0).sqrt();
        assert!((z[(0, 0)] + 1.0 / sd).abs() < 1e-12);
        assert_eq!(z[(1, 0)], 0.0);
        assert!((z[(2, 0)] - 1.0 / sd).abs() < 1e-12);
    }

    #[test]
    fn train_mean_maps_to_zero_and_test_rows_ignored() {
        let m = DMatrix::from_column_slice(4, 1, &[1.0, 3.0, 1000.0, 2.0]);
        let s = Standardizer::fit(&m, &[0, 1], &names(1)).unwrap();
        assert_eq!(s.means[0], 2.0);
        assert_eq!(s.apply(&m)[(3, 0)], 0.0);
    }

    #[test]
    fn zero_variance_names_column() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        match Standardizer::fit(&m, &[0, 1, 2], &names(2)) {
            Err(Error::ZeroVariance(c)) => assert_eq!(c, "c1"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_train_moments(data in prop::collection::vec(-1e3f64..1e3, 30), split in 3usize..10) {
            let m = DMatrix::from_column_slice(10, 3, &data);
            let rows: Vec<usize> = (0..split).collect();
            let s = match Standardizer::fit(&m, &rows, &names(3)) { Ok(s) => s, Err(_) => return Ok(()) };
            let z = s.apply(&m);
            let back = s.invert(&z);
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            for c in 0..3 {
                let col: Vec<f64> = rows.iter().map(|&r| z[(r, c)]).collect();
                let mu = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / col.len() as f64;
                prop_assert!(mu.abs() < 1e-10);
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}
