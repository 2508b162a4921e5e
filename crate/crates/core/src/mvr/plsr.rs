use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MODEL_FORMAT_VERSION;
use crate::linalg::matrix_serde;
use crate::preprocessing::Scaling;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NipalsParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NipalsParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// PLS2 regression model extracted by NIPALS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsrModel {
    pub version: u32,
    pub n_components: usize,
    /// n x A, unit-norm columns
    #[serde(with = "matrix_serde")]
    pub weights: DMatrix<f64>,
    /// n x A
    #[serde(with = "matrix_serde")]
    pub x_loadings: DMatrix<f64>,
    /// k x A, unit-norm Y weights from the inner iteration
    #[serde(with = "matrix_serde")]
    pub y_loadings: DMatrix<f64>,
    /// k x A, regression of the Y residual on each score
    #[serde(with = "matrix_serde")]
    pub y_coefficients: DMatrix<f64>,
    /// n x k operator on standardized data
    #[serde(with = "matrix_serde")]
    pub coefficients: DMatrix<f64>,
    pub iterations: Vec<usize>,
    pub scaling: Scaling,
}

fn largest_variance_column(f: &DMatrix<f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..f.ncols() {
        let col = f.column(c);
        let mu = col.mean();
        let v = col.iter().map(|e| (e - mu).powi(2)).sum::<f64>();
        if v > best.1 {
            best = (c, v);
        }
    }
    best.0
}

/// Regression operator `W (PᵀW)⁻¹ Cᵀ` for the first `a` components.
pub fn regression_operator(w: &DMatrix<f64>, p: &DMatrix<f64>, c: &DMatrix<f64>, a: usize) -> Result<DMatrix<f64>> {
    let w = w.columns(0, a);
    let p = p.columns(0, a);
    let c = c.columns(0, a);
    let ptw = p.transpose() * w;
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("PᵀW is singular".into()))?;
    Ok(w * inv * c.transpose())
}

pub fn plsr_fit(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    n_components: usize,
    params: &NipalsParams,
    scaling: Scaling,
) -> Result<PlsrModel> {
    let (m, n) = x.shape();
    let k = y.ncols();
    if y.nrows() != m {
        return Err(Error::shape(format!("{m} target rows"), y.nrows().to_string()));
    }
    if n_components == 0 || n_components > n.min(m) {
        return Err(Error::Rank {
            requested: n_components,
            rank: n.min(m),
        });
    }
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::Config("NIPALS tolerance and iteration limit must be positive".into()));
    }
    let mut e = x.clone();
    let mut f = y.clone();
    let mut weights = DMatrix::zeros(n, n_components);
    let mut x_loadings = DMatrix::zeros(n, n_components);
    let mut y_loadings = DMatrix::zeros(k, n_components);
    let mut y_coefficients = DMatrix::zeros(k, n_components);
    let mut iterations = Vec::with_capacity(n_components);

    for a in 0..n_components {
        let component = a + 1;
        let mut u: DVector<f64> = f.column(largest_variance_column(&f)).into_owned();
        if u.norm() == 0.0 {
            return Err(Error::Degenerate(format!("Y residual is zero at component {component}")));
        }
        let mut t_prev: Option<DVector<f64>> = None;
        let mut converged = None;
        let mut change = f64::INFINITY;
        let (mut w, mut t, mut q) = (DVector::zeros(n), DVector::zeros(m), DVector::zeros(k));
        for iter in 1..=params.max_iter {
            w = e.tr_mul(&u);
            let wn = w.norm();
            if wn == 0.0 {
                return Err(Error::Degenerate(format!("X residual carries no covariance at component {component}")));
            }
            w /= wn;
            t = &e * &w;
            q = f.tr_mul(&t);
            let qn = q.norm();
            if qn == 0.0 {
                return Err(Error::Degenerate(format!("score orthogonal to Y residual at component {component}")));
            }
            q /= qn;
            u = &f * &q;
            if let Some(prev) = &t_prev {
                change = (&t - prev).norm() / t.norm();
                if change < params.tol {
                    converged = Some(iter);
                    break;
                }
            }
            t_prev = Some(t.clone());
        }
        let Some(iters) = converged else {
            return Err(Error::NonConvergence { component, change });
        };
        let tt = t.dot(&t);
        let p = e.tr_mul(&t) / tt;
        let c = f.tr_mul(&t) / tt;
        e -= &t * p.transpose();
        f -= &t * c.transpose();
        weights.set_column(a, &w);
        x_loadings.set_column(a, &p);
        y_loadings.set_column(a, &q);
        y_coefficients.set_column(a, &c);
        iterations.push(iters);
    }
    let coefficients = regression_operator(&weights, &x_loadings, &y_coefficients, n_components)?;
    Ok(PlsrModel {
        version: MODEL_FORMAT_VERSION,
        n_components,
        weights,
        x_loadings,
        y_loadings,
        y_coefficients,
        coefficients,
        iterations,
        scaling,
    })
}

impl PlsrModel {
    /// Model restricted to its first `a` components.
    pub fn truncated(&self, a: usize) -> Result<PlsrModel> {
        if a == 0 || a > self.n_components {
            return Err(Error::Rank {
                requested: a,
                rank: self.n_components,
            });
        }
        Ok(PlsrModel {
            version: self.version,
            n_components: a,
            weights: self.weights.columns(0, a).into_owned(),
            x_loadings: self.x_loadings.columns(0, a).into_owned(),
            y_loadings: self.y_loadings.columns(0, a).into_owned(),
            y_coefficients: self.y_coefficients.columns(0, a).into_owned(),
            coefficients: regression_operator(&self.weights, &self.x_loadings, &self.y_coefficients, a)?,
            iterations: self.iterations[..a].to_vec(),
            scaling: self.scaling.clone(),
        })
    }

    /// X scores of standardized inputs.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let ptw = self.x_loadings.transpose() * &self.weights;
        let inv = ptw
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned("PᵀW is singular".into()))?;
        Ok(x * &self.weights * inv)
    }

    pub fn predict_standardized(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.coefficients
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.scaling.y.invert(&self.predict_standardized(&self.scaling.x.apply(x)))
    }
}
