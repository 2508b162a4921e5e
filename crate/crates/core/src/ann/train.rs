use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::linalg::{mean, select_rows};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// minibatch Adam with masks resampled per batch
    Adam,
    /// full-batch gradient descent with one frozen mask draw (debugging aid)
    FullBatchGd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_frac: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub optimizer: Optimizer,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_frac: 0.05,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            optimizer: Optimizer::Adam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    /// mean objective over the epoch's (masked) batches
    pub train: f64,
    /// mask-free objective on the validation rows; NaN without validation data
    pub validation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<LossRecord>,
}

impl TrainReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "validation_loss"])?;
        for r in &self.history {
            let val = if r.validation.is_finite() {
                r.validation.to_string()
            } else {
                String::new()
            };
            w.write_record([r.epoch.to_string(), r.train.to_string(), val])?;
        }
        w.flush().map_err(|e| Error::io("<loss history>", e))?;
        Ok(())
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], p: &TrainParams) {
        self.step += 1;
        let c1 = 1.0 - p.beta1.powi(self.step);
        let c2 = 1.0 - p.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * grad[i];
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= p.learning_rate * mh / (vh.sqrt() + p.epsilon);
        }
    }
}

/// Applies `params -= lr * grad` layer by layer.
fn gd_step(model: &mut Mlp, g: &Gradients, lr: f64) {
    for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
        *w -= gw * lr;
    }
    for (b, gb) in model.biases.iter_mut().zip(&g.biases) {
        let gb: &DVector<f64> = gb;
        for (v, d) in b.iter_mut().zip(gb.iter()) {
            *v -= lr * d;
        }
    }
}

/// Trains on standardized data. Validation rows, when given, are scored
/// without dropout and never influence the updates.
pub fn train(
    model: &mut Mlp,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    validation: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    params: &TrainParams,
) -> Result<TrainReport> {
    let m = x.nrows();
    if m == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if x.ncols() != model.n_inputs() || y.ncols() != model.n_outputs() || y.nrows() != m {
        return Err(Error::shape(
            format!("{m}x{} inputs and {m}x{} targets", model.n_inputs(), model.n_outputs()),
            format!("{:?} and {:?}", x.shape(), y.shape()),
        ));
    }
    if !(params.batch_frac > 0.0 && params.batch_frac <= 1.0) || !(params.learning_rate > 0.0) {
        return Err(Error::Config("batch_frac must be in (0, 1] and learning_rate positive".into()));
    }
    // Training streams are kept apart from the MC-prediction streams of the same seed.
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(u64::MAX);
    let batch = ((params.batch_frac * m as f64).ceil() as usize).clamp(1, m);
    let mut order: Vec<usize> = (0..m).collect();
    let mut adam = Adam::new(model.flat_params().len());
    let frozen = match params.optimizer {
        Optimizer::FullBatchGd => Some(model.sample_masks(m, &mut rng)),
        Optimizer::Adam => None,
    };
    let mut history = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let mut losses = Vec::new();
        match &frozen {
            Some(masks) => {
                let (loss, g) = model.loss_and_gradients(x, y, Some(masks));
                losses.push(loss);
                gd_step(model, &g, params.learning_rate);
            }
            None => {
                order.shuffle(&mut rng);
                for chunk in order.chunks(batch) {
                    let xb = select_rows(x, chunk);
                    let yb = select_rows(y, chunk);
                    let masks = model.sample_masks(chunk.len(), &mut rng);
                    let (loss, g) = model.loss_and_gradients(&xb, &yb, Some(&masks));
                    if !loss.is_finite() {
                        return Err(Error::Divergence { epoch });
                    }
                    losses.push(loss);
                    let mut flat = model.flat_params();
                    adam.update(&mut flat, &g.flatten(), params);
                    model.set_flat_params(&flat);
                }
            }
        }
        let train_loss = mean(&losses);
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let val = validation
            .filter(|(xv, _)| xv.nrows() > 0)
            .map(|(xv, yv)| model.loss(xv, yv, None))
            .unwrap_or(f64::NAN);
        history.push(LossRecord {
            epoch,
            train: train_loss,
            validation: val,
        });
    }
    Ok(TrainReport { history })
}
