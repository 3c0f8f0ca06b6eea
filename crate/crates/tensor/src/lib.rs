//! Dense 2-D tensors, a reverse-mode tape, Adam, and a checkpoint container.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
mod matrix;
mod param;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use matrix::{matmul, Matrix};
pub use param::{Gradients, Param, ParamId, ParamStore};
pub use tape::{Reduce, Tape, Var};

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("loss must be 1x1, got {0}x{1}")]
    NonScalarLoss(usize, usize),
    #[error("optimizer state is not initialized")]
    Uninitialized,
    #[error("optimizer state does not match the parameters: {0}")]
    StateMismatch(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
