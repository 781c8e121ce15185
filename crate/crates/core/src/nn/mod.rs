//! Minimal dense-tensor library with reverse-mode autodiff, the desk-scale
//! convolutional encoder, projection/prediction heads, AdamW, and checkpoints.

pub mod checkpoint;
pub mod kernels;
pub mod model;
pub mod optim;
pub mod tape;
pub mod tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot normalize zero vector at row {row}")]
    ZeroNorm { row: usize },
    #[error("no recorded graph: {0}")]
    NoGraph(String),
    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGradient { param: String },
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::{EncoderConfig, ParamSet, ParamVars};
pub use optim::{ema_update, AdamW};
pub use tape::{Grads, Tape, Var};
pub use tensor::Tensor;
