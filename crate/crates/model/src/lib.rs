//! Neural analogical matcher: DAG LSTM node embeddings, a Transformer
//! pointer network over candidate correspondences, and a candidate
//! inference selector.

pub mod config;
pub mod dag_lstm;
pub mod layers;
mod model;
pub mod sem;
pub mod train;

pub use config::{Ablation, GoldOrder, ModelConfig, TrainConfig};
pub use model::{Amn, AmnParams, DecodeContext, DecoderLayer, Embedded, EncoderLayer, LossParts, Prediction, Token};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Encoding(#[from] amn_core::encoding::EncodingError),
    #[error("label `{0}` is not in the vocabulary")]
    UnknownLabel(String),
    #[error("graph: {0}")]
    Graph(String),
    #[error("arity {arity} exceeds the model maximum {max}")]
    Arity { arity: usize, max: usize },
    #[error(transparent)]
    Tensor(#[from] amn_tensor::TensorError),
}
