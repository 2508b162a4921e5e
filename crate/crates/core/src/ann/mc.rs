use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::linalg::matrix_serde;
use crate::{Error, Result};

/// Passes accumulated per Welford chunk before the ordered merge.
pub const MC_CHUNK: usize = 64;

/// Monte-Carlo dropout predictive moments, in standardized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPrediction {
    #[serde(with = "matrix_serde")]
    pub mean: DMatrix<f64>,
    /// sample variance across passes plus the aleatoric floor 1/tau
    #[serde(with = "matrix_serde")]
    pub variance: DMatrix<f64>,
    pub passes: usize,
}

struct Moments {
    n: usize,
    mean: DMatrix<f64>,
    m2: DMatrix<f64>,
}

impl Moments {
    fn push(&mut self, x: &DMatrix<f64>) {
        self.n += 1;
        let n = self.n as f64;
        for ((mu, m2), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x.iter()) {
            let d = v - *mu;
            *mu += d / n;
            *m2 += d * (v - *mu);
        }
    }

    /// Pairwise combination of two partial results.
    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        let n = (self.n + other.n) as f64;
        let (na, nb) = (self.n as f64, other.n as f64);
        let mut mean = self.mean;
        let mut m2 = self.m2;
        for i in 0..mean.len() {
            let d = other.mean[i] - mean[i];
            mean[i] += d * nb / n;
            m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        Moments {
            n: self.n + other.n,
            mean,
            m2,
        }
    }
}

/// Runs `passes` masked forward passes over standardized `x`. Pass `i` draws
/// its masks from stream `i` of a generator seeded with `seed`, so the result
/// does not depend on the thread schedule.
pub fn predict_mc(model: &Mlp, x: &DMatrix<f64>, passes: usize, seed: u64) -> Result<McPrediction> {
    if passes == 0 {
        return Err(Error::Config("Monte-Carlo pass count must be at least 1".into()));
    }
    if x.ncols() != model.n_inputs() {
        return Err(Error::shape(format!("{} input columns", model.n_inputs()), x.ncols().to_string()));
    }
    let (rows, k) = (x.nrows(), model.n_outputs());
    let chunks: Vec<(usize, usize)> = (0..passes)
        .step_by(MC_CHUNK)
        .map(|s| (s, (s + MC_CHUNK).min(passes)))
        .collect();
    let partials: Vec<Moments> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = Moments {
                n: 0,
                mean: DMatrix::zeros(rows, k),
                m2: DMatrix::zeros(rows, k),
            };
            for pass in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(pass as u64);
                let masks = model.sample_masks(rows, &mut rng);
                acc.push(&model.forward(x, Some(&masks)));
            }
            acc
        })
        .collect();
    let total = partials
        .into_iter()
        .reduce(Moments::merge)
        .expect("at least one chunk");
    let floor = 1.0 / model.prior.tau;
    let variance = total.m2.map(|v| v / passes as f64 + floor);
    Ok(McPrediction {
        mean: total.mean,
        variance,
        passes,
    })
}

impl McPrediction {
    /// Raw-unit mean and symmetric band `mean ± z·sd` using the model's target scaling.
    pub fn to_raw(&self, model: &Mlp, z: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mean = model.scaling.y.invert(&self.mean);
        let half = DMatrix::from_fn(self.mean.nrows(), self.mean.ncols(), |r, c| {
            z * self.variance[(r, c)].sqrt() * model.scaling.y.stds[c]
        });
        (mean.clone(), &mean - &half, mean + half)
    }
}
