//! Minimal neural substrate: MLPs with reverse-mode gradients, Adam, and
//! the conditional VAE. All arithmetic is f64 and training is bit-exactly
//! reproducible given initial parameters, dataset order and the rng seed.

pub mod adam;
pub mod checkpoint;
pub mod cvae;
pub mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use cvae::{
    cvae_eval_loss, cvae_fit, cvae_loss_and_grads, cvae_loss_and_grads_with_eps, cvae_sample,
    CvaeGrads, CvaeLoss, CvaeParams, FitReport,
};
pub use mlp::{Activation, Mlp, MlpCache, MlpGrads};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch { what: String, expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
