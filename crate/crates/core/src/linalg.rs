//! Small numeric helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// JSON layout for dense matrices: shape plus row-major data.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Serde adapter for `DMatrix<f64>` fields (`#[serde(with = "crate::linalg::matrix_serde")]`).
pub mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        MatrixRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.data.len() != repr.rows * repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} values, expected {}x{}",
                repr.data.len(),
                repr.rows,
                repr.cols
            )));
        }
        Ok(DMatrix::from_row_slice(repr.rows, repr.cols, &repr.data))
    }
}

/// Serde adapter for `Vec<DMatrix<f64>>`.
pub mod matrix_vec_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "matrix_serde")] DMatrix<f64>);

    pub fn serialize<S: Serializer>(v: &[DMatrix<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let wrapped: Vec<Wrapped> = v.iter().cloned().map(Wrapped).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DMatrix<f64>>, D::Error> {
        let wrapped = Vec::<Wrapped>::deserialize(d)?;
        Ok(wrapped.into_iter().map(|w| w.0).collect())
    }
}

/// Serializes non-finite floats as `null` and reads `null` back as NaN.
pub mod nan_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn simple_linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Solves the symmetric positive-definite system `a x = b` by Cholesky.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("normal equations are not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Least-squares solution of `x b = y` through the normal equations.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("{} rows", x.nrows()), format!("{} rows", y.nrows())));
    }
    let xtx = x.tr_mul(x);
    let xty = x.tr_mul(y);
    solve_spd(&xtx, &xty)
}

/// Numerical rank from singular values with a relative tolerance.
pub fn numerical_rank(singular_values: &DVector<f64>, rows: usize, cols: usize) -> usize {
    let smax = singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (rows.max(cols) as f64) * f64::EPSILON * 16.0;
    singular_values.iter().filter(|&&s| s > tol).count()
}

/// Selects the given rows of a matrix, in order.
pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |r, c| m[(rows[r], c)])
}

/// Linear interpolation in a table sorted by `xs`. Outside the table the end
/// segment is extended linearly and `true` is returned as the extrapolation flag.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> (f64, bool) {
    debug_assert_eq!(xs.len(), ys.len());
    match xs.len() {
        0 => (f64::NAN, true),
        1 => (ys[0], x != xs[0]),
        n => {
            let extrapolated = x < xs[0] || x > xs[n - 1];
            let i = match xs.partition_point(|&v| v <= x) {
                0 => 0,
                p if p >= n => n - 2,
                p => p - 1,
            };
            let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
            let w = (x - x0) / (x1 - x0);
            ((1.0 - w) * y0 + w * y1, extrapolated)
        }
    }
}
