use nalgebra::{DMatrix, DVector};

use crate::linalg::numerical_rank;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PcaFactorization {
    /// m x A
    pub scores: DMatrix<f64>,
    /// n x A, orthonormal columns
    pub loadings: DMatrix<f64>,
    /// m x n, what the retained components leave unexplained
    pub residual: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
    /// share of the total variance of `x`
    pub explained_variance_ratio: Vec<f64>,
    pub rank: usize,
}

/// Principal components of an already standardized matrix, via SVD.
///
/// Each loading column is signed so its largest-magnitude entry is positive.
pub fn pca_fit(x: &DMatrix<f64>, n_components: usize) -> Result<PcaFactorization> {
    let (m, n) = x.shape();
    if n_components == 0 || n_components > m.min(n) {
        return Err(Error::Rank {
            requested: n_components,
            rank: m.min(n),
        });
    }
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let rank = numerical_rank(&svd.singular_values, m, n);
    if n_components > rank {
        return Err(Error::Rank {
            requested: n_components,
            rank,
        });
    }
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut loadings = DMatrix::zeros(n, n_components);
    for (col, &k) in order.iter().take(n_components).enumerate() {
        let mut v: DVector<f64> = v_t.row(k).transpose();
        let pivot = v.iter().cloned().fold(0.0_f64, |best, e| if e.abs() > best.abs() { e } else { best });
        if pivot < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(col, &v);
    }
    let scores = x * &loadings;
    let residual = x - &scores * loadings.transpose();
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let explained_variance: Vec<f64> = order
        .iter()
        .take(n_components)
        .map(|&k| svd.singular_values[k].powi(2) / m as f64)
        .collect();
    let explained_variance_ratio = order
        .iter()
        .take(n_components)
        .map(|&k| svd.singular_values[k].powi(2) / total)
        .collect();
    Ok(PcaFactorization {
        scores,
        loadings,
        residual,
        explained_variance,
        explained_variance_ratio,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rank_one_is_fully_explained() {
        let u = DVector::from_fn(20, |i, _| i as f64 - 9.5);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = &u * v.transpose();
        let p = pca_fit(&x, 1).unwrap();
        assert!(p.residual.norm() < 1e-10);
        assert!(matches!(pca_fit(&x, 2), Err(Error::Rank { rank: 1, .. })));
    }

    #[test]
    fn diagonal_covariance_ratios() {
        // orthogonal columns with variances 4 and 1
        let mut x = DMatrix::zeros(4, 2);
        for (i, (a, b)) in [(2.0, 1.0), (-2.0, 1.0), (2.0, -1.0), (-2.0, -1.0)].iter().enumerate() {
            x[(i, 0)] = *a;
            x[(i, 1)] = *b;
        }
        let p = pca_fit(&x, 2).unwrap();
        assert!((p.explained_variance_ratio[0] - 0.8).abs() < 1e-12);
        assert!((p.explained_variance_ratio[1] - 0.2).abs() < 1e-12);
        assert!((p.explained_variance[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_matches_covariance_eigenvectors() {
        let x = random(50, 6, 5);
        let p = pca_fit(&x, 6).unwrap();
        assert!((&p.scores * p.loadings.transpose() - &x).norm() < 1e-10);
        let eig = (x.transpose() * &x).symmetric_eigen();
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (col, &k) in order.iter().enumerate() {
            let e = eig.eigenvectors.column(k);
            let l = p.loadings.column(col);
            let d = e.dot(&l).abs();
            assert!((d - 1.0).abs() < 1e-9, "component {col}: |cos| = {d}");
            assert!((eig.eigenvalues[k] / 50.0 - p.explained_variance[col]).abs() < 1e-9);
        }
        let gram = p.loadings.transpose() * &p.loadings;
        assert!((gram - DMatrix::identity(6, 6)).abs().max() < 1e-8);
    }

    #[test]
    fn reconstruction_error_non_increasing() {
        let x = random(30, 5, 9);
        let errs: Vec<f64> = (1..=5).map(|a| pca_fit(&x, a).unwrap().residual.norm()).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let ev = pca_fit(&x, 5).unwrap().explained_variance;
        assert!(ev.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sign_convention() {
        let p = pca_fit(&random(25, 4, 2), 4).unwrap();
        for c in 0..4 {
            let col = p.loadings.column(c);
            let big = col.iter().cloned().fold(0.0_f64, |b, e| if e.abs() > b.abs() { e } else { b });
            assert!(big > 0.0);
        }
    }
}
