//! Multilayer perceptron with dropout before every weight layer, trained on
//! squared error plus L2 decay, with Monte-Carlo dropout predictions.

pub mod mc;
pub mod mlp;
pub mod train;

pub use mc::{predict_mc, McPrediction, MC_CHUNK};
pub use mlp::{mlp_init, DropoutPrior, Gradients, Masks, Mlp};
pub use train::{train, LossRecord, Optimizer, TrainParams, TrainReport};
