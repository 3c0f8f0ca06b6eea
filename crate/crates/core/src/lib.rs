//! Symbolic side of analogical matching: relational graphs, structure-mapping
//! constraints and scoring, an exact/greedy matcher used as ground truth,
//! the synthetic analogy generator, and the label/signature graph encodings
//! consumed by the neural model.

pub mod encoding;
pub mod ir;
pub mod matcher;
pub mod smt;
pub mod synth;

pub use ir::{Correspondence, Mapping, NodeId, NodeKind, RelGraph};
