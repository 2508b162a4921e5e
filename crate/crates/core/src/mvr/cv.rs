use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pca::pca_fit;
use super::pcr::{pcr_fit_on_pca, DEFAULT_RIDGE_ALPHAS};
use super::plsr::{plsr_fit, NipalsParams};
use crate::linalg::select_rows;
use crate::preprocessing::Scaling;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pcr,
    Plsr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvParams {
    pub folds: usize,
    pub threshold: f64,
    pub ridge_alphas: Vec<f64>,
    pub nipals: NipalsParams,
}

impl Default for CvParams {
    fn default() -> Self {
        Self {
            folds: 20,
            threshold: 0.9,
            ridge_alphas: DEFAULT_RIDGE_ALPHAS.to_vec(),
            nipals: NipalsParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: ModelKind,
    pub folds: usize,
    pub threshold: f64,
    pub max_components: usize,
    /// `press[a-1][target]`, for the dimensions the scan reached
    pub press: Vec<Vec<f64>>,
    /// `ss[a][target]`, with `ss[0]` the total sum of squares about zero
    pub ss: Vec<Vec<f64>>,
    /// `ratio[a-1][target] = press[a-1] / ss[a-1]`
    pub ratio: Vec<Vec<f64>>,
    pub significant: Vec<bool>,
    pub selected_components: usize,
    /// set when even the first component fails the ratio test
    pub no_significant_component: bool,
    /// why the scan ended before an insignificant dimension, if it did
    pub stopped_early: Option<String>,
}

/// Contiguous, nearly equal fold boundaries.
pub fn fold_ranges(m: usize, folds: usize) -> Vec<(usize, usize)> {
    (0..folds).map(|f| (f * m / folds, (f + 1) * m / folds)).collect()
}

/// Standardized predictions of an `a`-component model.
fn fit_predict(
    kind: ModelKind,
    x_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    x_eval: &DMatrix<f64>,
    a: usize,
    params: &CvParams,
) -> Result<DMatrix<f64>> {
    let scaling = Scaling::identity(x_train.ncols(), y_train.ncols());
    Ok(match kind {
        ModelKind::Plsr => plsr_fit(x_train, y_train, a, &params.nipals, scaling)?.predict_standardized(x_eval),
        ModelKind::Pcr => {
            let pca = pca_fit(x_train, a)?;
            pcr_fit_on_pca(&pca, y_train, a, &params.ridge_alphas, scaling)?.predict_standardized(x_eval)
        }
    })
}

fn column_sse(y: &DMatrix<f64>, pred: &DMatrix<f64>) -> Vec<f64> {
    (0..y.ncols())
        .map(|c| y.column(c).iter().zip(pred.column(c).iter()).map(|(a, b)| (a - b).powi(2)).sum())
        .collect()
}

/// Sequential-mode cross-validation over contiguous folds of standardized data.
pub fn sequential_cv(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    kind: ModelKind,
    max_components: usize,
    params: &CvParams,
) -> Result<CvReport> {
    let m = x.nrows();
    if max_components < 1 {
        return Err(Error::Config("max_components must be at least 1".into()));
    }
    if params.folds < 2 || m < params.folds {
        return Err(Error::InsufficientData {
            what: "cross-validation folds".into(),
            needed: params.folds.max(2),
            got: m,
        });
    }
    let k = y.ncols();
    let ranges = fold_ranges(m, params.folds);
    let mut press = Vec::new();
    let mut ss = vec![(0..k).map(|c| y.column(c).norm_squared()).collect::<Vec<f64>>()];
    let mut ratio = Vec::new();
    let mut significant = Vec::new();
    // Components are added one at a time and the scan stops at the first
    // insignificant one, so dimensions past it are never fitted.
    let mut stopped_early = None;
    for a in 1..=max_components {
        let per_fold: Vec<Result<Vec<f64>>> = ranges
            .par_iter()
            .map(|&(lo, hi)| {
                let train: Vec<usize> = (0..lo).chain(hi..m).collect();
                let held: Vec<usize> = (lo..hi).collect();
                let pred = fit_predict(
                    kind,
                    &select_rows(x, &train),
                    &select_rows(y, &train),
                    &select_rows(x, &held),
                    a,
                    params,
                )?;
                Ok(column_sse(&select_rows(y, &held), &pred))
            })
            .collect();
        let scored = per_fold
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .and_then(|folds| Ok((folds, fit_predict(kind, x, y, x, a, params)?)));
        let (folds, full) = match scored {
            Ok(v) => v,
            // a dimension NIPALS cannot reach ends the scan like an insignificant one
            Err(e @ Error::NonConvergence { .. }) => {
                stopped_early = Some(format!("scan stopped at {a} components: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let mut press_a = vec![0.0; k];
        for sse in folds {
            for (acc, v) in press_a.iter_mut().zip(sse) {
                *acc += v;
            }
        }
        let ratio_a: Vec<f64> = (0..k).map(|c| press_a[c] / ss[a - 1][c]).collect();
        let keep = ratio_a.iter().any(|&v| v < params.threshold);
        ss.push(column_sse(y, &full));
        press.push(press_a);
        ratio.push(ratio_a);
        significant.push(keep);
        if !keep {
            break;
        }
    }
    let leading = significant.iter().take_while(|&&s| s).count();
    Ok(CvReport {
        model: kind,
        folds: params.folds,
        threshold: params.threshold,
        max_components,
        press,
        ss,
        ratio,
        significant,
        selected_components: leading.max(1),
        no_significant_component: leading == 0,
        stopped_early,
    })
}

impl CvReport {
    /// One row per candidate dimension and target.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, target_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["components", "target", "press", "ss_previous", "ratio", "significant", "selected"])?;
        for a in 0..self.press.len() {
            for (c, name) in target_names.iter().enumerate() {
                w.write_record([
                    (a + 1).to_string(),
                    name.clone(),
                    self.press[a][c].to_string(),
                    self.ss[a][c].to_string(),
                    self.ratio[a][c].to_string(),
                    self.significant[a].to_string(),
                    (a + 1 == self.selected_components).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<cv csv>", e))?;
        Ok(())
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
    fn folds_cover_rows_contiguously() {
        let r = fold_ranges(103, 20);
        assert_eq!(r[0].0, 0);
        assert_eq!(r[19].1, 103);
        assert!(r.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn independent_target_clamps_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(200, 4, &mut rng);
        let y = random(200, 1, &mut rng);
        for kind in [ModelKind::Pcr, ModelKind::Plsr] {
            let r = sequential_cv(&x, &y, kind, 3, &CvParams::default()).unwrap();
            assert_eq!(r.selected_components, 1);
            assert!(r.no_significant_component);
        }
    }

    #[test]
    fn infinite_threshold_selects_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(100, 4, &mut rng);
        let y = random(100, 2, &mut rng);
        let p = CvParams {
            threshold: f64::INFINITY,
            ..Default::default()
        };
        let r = sequential_cv(&x, &y, ModelKind::Plsr, 4, &p).unwrap();
        assert_eq!(r.selected_components, 4);
    }

    #[test]
    fn unreachable_dimension_ends_the_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(100, 4, &mut rng);
        let y = &x.columns(0, 2) * 2.0 + random(100, 2, &mut rng) * 0.1;
        let p = CvParams {
            nipals: NipalsParams { tol: 1e-300, max_iter: 1 },
            ..Default::default()
        };
        let r = sequential_cv(&x, &y, ModelKind::Plsr, 4, &p).unwrap();
        assert!(r.stopped_early.as_deref().unwrap().contains("at 1 components"));
        assert!(r.press.is_empty());
        assert_eq!(r.selected_components, 1);
    }

    #[test]
    fn deterministic_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(120, 5, &mut rng);
        let y = x.columns(0, 2) + random(120, 2, &mut rng) * 0.1;
        let a = sequential_cv(&x, &y, ModelKind::Pcr, 4, &CvParams::default()).unwrap();
        let b = sequential_cv(&x, &y, ModelKind::Pcr, 4, &CvParams::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
