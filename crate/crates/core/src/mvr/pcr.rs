use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pca::{pca_fit, PcaFactorization};
use super::MODEL_FORMAT_VERSION;
use crate::linalg::matrix_serde;
use crate::preprocessing::Scaling;
use crate::{Error, Result};

pub const DEFAULT_RIDGE_ALPHAS: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

/// Ridge regression of the targets on the leading principal-component scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcrModel {
    pub version: u32,
    pub n_components: usize,
    /// n x A
    #[serde(with = "matrix_serde")]
    pub loadings: DMatrix<f64>,
    /// A x k
    #[serde(with = "matrix_serde")]
    pub coefficients: DMatrix<f64>,
    /// selected ridge penalty per target
    pub ridge_alpha: Vec<f64>,
    pub scaling: Scaling,
    pub warnings: Vec<String>,
}

struct RidgeChoice {
    alpha: f64,
    coef: Vec<f64>,
    loo_mse: f64,
}

/// Ridge fit of one target with α picked by exact leave-one-out error,
/// computed from the hat-matrix diagonal.
fn ridge_loo(t: &DMatrix<f64>, gram: &DMatrix<f64>, y: &[f64], alphas: &[f64], warnings: &mut Vec<String>) -> Result<RidgeChoice> {
    let a = t.ncols();
    let yv = nalgebra::DVector::from_column_slice(y);
    let tty = t.tr_mul(&yv);
    let mut best: Option<RidgeChoice> = None;
    let smallest_positive = alphas.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    for &alpha in alphas {
        let mut lhs = gram.clone();
        for i in 0..a {
            lhs[(i, i)] += alpha;
        }
        let chol = match lhs.cholesky() {
            Some(c) => c,
            None if alpha == 0.0 && smallest_positive.is_finite() => {
                let msg = format!("normal equations singular at alpha = 0; using alpha = {smallest_positive}");
                if !warnings.contains(&msg) {
                    warnings.push(msg);
                }
                continue;
            }
            None => continue,
        };
        let coef = chol.solve(&tty);
        let inv_tt = chol.solve(&t.transpose());
        let fitted = t * &coef;
        let mut sse = 0.0;
        for i in 0..t.nrows() {
            let h = t.row(i).dot(&inv_tt.column(i).transpose());
            let e = (yv[i] - fitted[i]) / (1.0 - h);
            sse += e * e;
        }
        let loo_mse = sse / t.nrows() as f64;
        let better = match &best {
            None => true,
            Some(b) => loo_mse < b.loo_mse || (b.loo_mse.is_nan() && !loo_mse.is_nan()),
        };
        if better {
            best = Some(RidgeChoice {
                alpha,
                coef: coef.iter().cloned().collect(),
                loo_mse,
            });
        }
    }
    best.ok_or_else(|| Error::IllConditioned("ridge normal equations singular for every candidate alpha".into()))
}

/// Fits PCR with `n_components` on standardized `x` and `y`. `scaling` maps
/// raw data to the standardized scale and is kept for prediction.
pub fn pcr_fit(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    n_components: usize,
    ridge_alphas: &[f64],
    scaling: Scaling,
) -> Result<PcrModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("{} target rows", x.nrows()), y.nrows().to_string()));
    }
    if ridge_alphas.is_empty() || ridge_alphas.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::Config("ridge alphas must be a non-empty list of non-negative values".into()));
    }
    let pca = pca_fit(x, n_components)?;
    pcr_fit_on_pca(&pca, y, n_components, ridge_alphas, scaling)
}

/// PCR on the leading `n_components` of an existing factorization of the same inputs.
pub fn pcr_fit_on_pca(
    pca: &PcaFactorization,
    y: &DMatrix<f64>,
    n_components: usize,
    ridge_alphas: &[f64],
    scaling: Scaling,
) -> Result<PcrModel> {
    if n_components == 0 || n_components > pca.loadings.ncols() {
        return Err(Error::Rank {
            requested: n_components,
            rank: pca.loadings.ncols(),
        });
    }
    let scores = pca.scores.columns(0, n_components).into_owned();
    let gram = scores.tr_mul(&scores);
    let mut coefficients = DMatrix::zeros(n_components, y.ncols());
    let mut ridge_alpha = Vec::with_capacity(y.ncols());
    let mut warnings = Vec::new();
    for k in 0..y.ncols() {
        let col: Vec<f64> = y.column(k).iter().cloned().collect();
        let choice = ridge_loo(&scores, &gram, &col, ridge_alphas, &mut warnings)?;
        for (i, c) in choice.coef.iter().enumerate() {
            coefficients[(i, k)] = *c;
        }
        ridge_alpha.push(choice.alpha);
    }
    Ok(PcrModel {
        version: MODEL_FORMAT_VERSION,
        n_components,
        loadings: pca.loadings.columns(0, n_components).into_owned(),
        coefficients,
        ridge_alpha,
        scaling,
        warnings,
    })
}

impl PcrModel {
    /// Standardized inputs to standardized predictions.
    pub fn predict_standardized(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.loadings * &self.coefficients
    }

    /// Raw inputs to raw-unit predictions.
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.scaling.y.invert(&self.predict_standardized(&self.scaling.x.apply(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn noiseless_recovery_in_score_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(60, 5, &mut rng);
        let pca = pca_fit(&x, 3).unwrap();
        let b0 = random(3, 2, &mut rng);
        let y = &pca.scores * &b0;
        let m = pcr_fit(&x, &y, 3, &[1e-12], Scaling::identity(5, 2)).unwrap();
        assert!((m.coefficients - b0).abs().max() < 1e-6);
    }

    #[test]
    fn full_rank_tiny_ridge_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(80, 4, &mut rng);
        let y = random(80, 2, &mut rng);
        let m = pcr_fit(&x, &y, 4, &[1e-10], Scaling::identity(4, 2)).unwrap();
        let beta = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
        let ols = &x * beta;
        let pred = m.predict_standardized(&x);
        assert!((pred - &ols).norm() / ols.norm() < 1e-8);
    }

    #[test]
    fn noise_orthogonal_to_scores_gives_no_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = random(50, 3, &mut rng);
        for mut c in x.column_iter_mut() {
            let mu = c.mean();
            c.add_scalar_mut(-mu);
        }
        let pca = pca_fit(&x, 2).unwrap();
        let mut raw = random(50, 1, &mut rng);
        let mu = raw.mean();
        raw.add_scalar_mut(-mu);
        // project out the retained score space
        let t = &pca.scores;
        let proj = t * (t.transpose() * t).try_inverse().unwrap() * t.transpose();
        let y = &raw - proj * &raw;
        let m = pcr_fit(&x, &y, 2, &DEFAULT_RIDGE_ALPHAS, Scaling::identity(3, 1)).unwrap();
        let pred = m.predict_standardized(&x);
        let sse = (&y - &pred).norm_squared();
        let mean = y.mean();
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((1.0 - sse / sst).abs() < 1e-6);
    }

    #[test]
    fn zero_alpha_singular_falls_back() {
        let mut t = DMatrix::zeros(10, 2);
        t.column_mut(0).iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 - 4.5);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let gram = t.tr_mul(&t);
        let mut warnings = Vec::new();
        let choice = ridge_loo(&t, &gram, &y, &[0.0, 1e-3], &mut warnings).unwrap();
        assert_eq!(choice.alpha, 1e-3);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn loo_matches_brute_force_refits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random(15, 2, &mut rng);
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gram = t.tr_mul(&t);
        let choice = ridge_loo(&t, &gram, &y, &[0.5], &mut Vec::new()).unwrap();
        let mut sse = 0.0;
        for out in 0..15 {
            let keep: Vec<usize> = (0..15).filter(|&i| i != out).collect();
            let tk = crate::linalg::select_rows(&t, &keep);
            let yk = nalgebra::DVector::from_iterator(14, keep.iter().map(|&i| y[i]));
            let lhs = tk.tr_mul(&tk) + DMatrix::identity(2, 2) * 0.5;
            let b = lhs.try_inverse().unwrap() * tk.tr_mul(&yk);
            let e = y[out] - t.row(out).dot(&b.transpose());
            sse += e * e;
        }
        assert!((choice.loo_mse - sse / 15.0).abs() < 1e-12);
    }
}
