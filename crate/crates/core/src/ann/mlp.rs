use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::matrix_vec_serde;
use crate::mvr::MODEL_FORMAT_VERSION;
use crate::preprocessing::Scaling;
use crate::{Error, Result};

/// Dropout probability, prior length scale and model precision. Together with
/// the training-set size they fix the weight-decay coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropoutPrior {
    pub p_drop: f64,
    pub length_scale: f64,
    pub tau: f64,
}

impl Default for DropoutPrior {
    fn default() -> Self {
        Self {
            p_drop: 0.2,
            length_scale: 10.0,
            tau: 1.0,
        }
    }
}

impl DropoutPrior {
    pub fn lambda(&self, n_train: usize) -> f64 {
        self.length_scale * self.length_scale * (1.0 - self.p_drop) / (2.0 * n_train as f64 * self.tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p_drop) {
            return Err(Error::Config(format!("p_drop must lie in [0, 1), got {}", self.p_drop)));
        }
        if !(self.tau > 0.0 && self.length_scale > 0.0) {
            return Err(Error::Config("tau and length_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` is `layer_sizes[l+1] x layer_sizes[l]`
    #[serde(with = "matrix_vec_serde")]
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub prior: DropoutPrior,
    pub n_train: usize,
    pub lambda: f64,
    pub seed: u64,
    pub mc_passes: usize,
    pub scaling: Scaling,
}

/// One inverted-dropout multiplier matrix per weight layer, shaped like that layer's input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Masks(pub Vec<DMatrix<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Builds a network with He-uniform weights (bound `sqrt(6 / fan_in)`) and zero biases.
pub fn mlp_init(layer_sizes: &[usize], seed: u64, prior: DropoutPrior, n_train: usize) -> Result<Mlp> {
    if layer_sizes.len() < 3 {
        return Err(Error::Config(format!(
            "need input, at least one hidden and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Config(format!("layer sizes must be positive, got {layer_sizes:?}")));
    }
    if n_train == 0 {
        return Err(Error::EmptyDataset("no training rows for the network".into()));
    }
    prior.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / fan_in as f64).sqrt();
        weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound)));
        biases.push(vec![0.0; fan_out]);
    }
    Ok(Mlp {
        version: MODEL_FORMAT_VERSION,
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
        prior,
        n_train,
        lambda: prior.lambda(n_train),
        seed,
        mc_passes: 10_000,
        scaling: Scaling::identity(layer_sizes[0], *layer_sizes.last().unwrap()),
    })
}

fn relu(m: &mut DMatrix<f64>) {
    m.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Affine map of a row batch: `a Wᵀ + 1 bᵀ`.
fn affine(a: &DMatrix<f64>, w: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let mut z = a * w.transpose();
    for (c, bc) in b.iter().enumerate() {
        z.column_mut(c).add_scalar_mut(*bc);
    }
    z
}

impl Mlp {
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// True when the stored decay coefficient equals the one implied by the prior.
    pub fn lambda_consistent(&self) -> bool {
        self.lambda == self.prior.lambda(self.n_train)
    }

    fn check_inputs(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::shape(format!("{} input columns", self.n_inputs()), x.ncols().to_string()));
        }
        Ok(())
    }

    /// Draws keep/drop multipliers (`1/(1-p)` or `0`) for a batch of `rows`.
    pub fn sample_masks<R: Rng>(&self, rows: usize, rng: &mut R) -> Masks {
        let p = self.prior.p_drop;
        let scale = 1.0 / (1.0 - p);
        Masks(
            self.layer_sizes[..self.n_layers()]
                .iter()
                .map(|&width| {
                    DMatrix::from_fn(rows, width, |_, _| {
                        if p == 0.0 || rng.random::<f64>() >= p {
                            scale
                        } else {
                            0.0
                        }
                    })
                })
                .collect(),
        )
    }

    /// Forward pass on standardized inputs; returns standardized outputs and,
    /// per layer, the (masked) layer inputs needed for backpropagation.
    fn forward_trace(&self, x: &DMatrix<f64>, masks: Option<&Masks>) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let mut inputs = Vec::with_capacity(self.n_layers());
        let mut a = x.clone();
        for l in 0..self.n_layers() {
            if let Some(m) = masks {
                a.component_mul_assign(&m.0[l]);
            }
            let mut z = affine(&a, &self.weights[l], &self.biases[l]);
            inputs.push(a);
            if l + 1 < self.n_layers() {
                relu(&mut z);
            }
            a = z;
        }
        (a, inputs)
    }

    pub fn forward(&self, x: &DMatrix<f64>, masks: Option<&Masks>) -> DMatrix<f64> {
        self.forward_trace(x, masks).0
    }

    pub fn penalty(&self) -> f64 {
        let w: f64 = self.weights.iter().map(|w| w.norm_squared()).sum();
        let b: f64 = self.biases.iter().flatten().map(|v| v * v).sum();
        self.lambda * (w + b)
    }

    /// Mean over rows of the squared error norm, plus the L2 penalty.
    pub fn loss(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, masks: Option<&Masks>) -> f64 {
        let pred = self.forward(x, masks);
        (pred - y).norm_squared() / x.nrows() as f64 + self.penalty()
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn loss_and_gradients(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, masks: Option<&Masks>) -> (f64, Gradients) {
        let m = x.nrows() as f64;
        let (pred, inputs) = self.forward_trace(x, masks);
        let resid = pred - y;
        let loss = resid.norm_squared() / m + self.penalty();
        let mut delta = resid * (2.0 / m);
        let mut gw = vec![DMatrix::zeros(0, 0); self.n_layers()];
        let mut gb = vec![DVector::zeros(0); self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            let a = &inputs[l];
            gw[l] = delta.transpose() * a + &self.weights[l] * (2.0 * self.lambda);
            gb[l] = DVector::from_fn(delta.ncols(), |c, _| delta.column(c).sum() + 2.0 * self.lambda * self.biases[l][c]);
            if l > 0 {
                // through the weights, then the mask and the ReLU of the layer below
                let mut back = &delta * &self.weights[l];
                if let Some(mk) = masks {
                    back.component_mul_assign(&mk.0[l]);
                }
                for (g, act) in back.iter_mut().zip(a.iter()) {
                    if *act <= 0.0 {
                        *g = 0.0;
                    }
                }
                delta = back;
            }
        }
        (loss, Gradients { weights: gw, biases: gb })
    }

    /// Mask-free prediction on standardized inputs.
    pub fn predict_standardized(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_inputs(x)?;
        Ok(self.forward(x, None))
    }

    /// Mask-free prediction on raw inputs, destandardized.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_inputs(x)?;
        Ok(self.scaling.y.invert(&self.forward(&self.scaling.x.apply(x), None)))
    }

    /// All parameters in a flat vector (weights row-major per layer, then biases).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    out.push(w[(r, c)]);
                }
            }
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    w[(r, c)] = p[i];
                    i += 1;
                }
            }
            for v in b.iter_mut() {
                *v = p[i];
                i += 1;
            }
        }
    }
}

impl Gradients {
    /// Same layout as [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    out.push(w[(r, c)]);
                }
            }
            out.extend(b.iter());
        }
        out
    }
}
