//! Relational representations as semi-ordered DAGs.

mod graph;
mod parse;
mod serialize;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use graph::{ExprNode, GraphBuilder, NodeId, NodeKind, RelGraph};
pub use parse::{parse_fragment, parse_sexpr, Fragment};
pub use serialize::{
    graph_from_json, graph_to_json, mapping_from_json, mapping_to_dot, mapping_to_json,
    serialize_graph, serialize_mapping, Format, GraphDoc,
};

#[derive(Debug, thiserror::Error)]
pub enum IrError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("symbol `{symbol}` used as {found}, previously {expected}")]
    ArityMismatch { symbol: String, expected: String, found: String },
    #[error("cycle detected through node {0}")]
    Cycle(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid node {id}: {reason}")]
    InvalidNode { id: NodeId, reason: String },
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A base/target node pair.
pub type Correspondence = (NodeId, NodeId);

/// Correspondences, candidate inferences and structural score of an analogy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub correspondences: BTreeSet<Correspondence>,
    pub inferences: BTreeSet<NodeId>,
    pub score: u64,
}

impl Mapping {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Mapping {
            correspondences: pairs.into_iter().map(|(b, t)| (NodeId(b), NodeId(t))).collect(),
            ..Default::default()
        }
    }

    pub fn matched_base(&self) -> BTreeSet<NodeId> {
        self.correspondences.iter().map(|&(b, _)| b).collect()
    }

    pub fn matched_target(&self) -> BTreeSet<NodeId> {
        self.correspondences.iter().map(|&(_, t)| t).collect()
    }

    /// Checks id ranges and that inferences are unmatched base nodes.
    pub fn validate(&self, base: &RelGraph, target: &RelGraph) -> Result<(), IrError> {
        for &(b, t) in &self.correspondences {
            if b.index() >= base.len() {
                return Err(IrError::InvalidMapping(format!("base id {b} out of range")));
            }
            if t.index() >= target.len() {
                return Err(IrError::InvalidMapping(format!("target id {t} out of range")));
            }
        }
        let matched = self.matched_base();
        for &c in &self.inferences {
            if c.index() >= base.len() {
                return Err(IrError::InvalidMapping(format!("inference {c} out of range")));
            }
            if matched.contains(&c) {
                return Err(IrError::InvalidMapping(format!("inference {c} is matched")));
            }
        }
        Ok(())
    }
}
