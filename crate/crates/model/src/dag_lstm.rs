//! Child-sum LSTM over a DAG, evaluated one topological layer at a time.

use amn_core::RelGraph;
use amn_tensor::{ParamId, ParamStore, Tape, Var};
use rand::Rng;

use crate::ModelError;

/// Gate blocks inside the fused matrices, in column order.
const I: usize = 0;
const O: usize = 1;
const C: usize = 2;
const F: usize = 3;

#[derive(Debug, Clone)]
pub struct DagLstm {
    /// Initial embedding per token.
    pub embedding: ParamId,
    /// Input weights for the i, o, ĉ and f gates side by side (d × 4d).
    pub w: ParamId,
    /// Per-edge-type child weights in the same layout.
    pub u: Vec<ParamId>,
    pub b: ParamId,
    pub dim: usize,
}

impl DagLstm {
    pub fn new(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, edge_types: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let embedding = store.add_uniform(&format!("{name}.embedding"), vocab, dim, bound, rng);
        let w = store.add_fan_in(&format!("{name}.w"), dim, 4 * dim, rng);
        let u = (0..edge_types).map(|e| store.add_fan_in(&format!("{name}.u{e}"), dim, 4 * dim, rng)).collect();
        let b = store.add_zeros(&format!("{name}.b"), 1, 4 * dim);
        DagLstm { embedding, w, u, b, dim }
    }

    /// Edge type of argument `k` of a node: its position for ordered
    /// relations, one shared type for unordered ones.
    pub fn edge_type(&self, positional: bool, k: usize) -> usize {
        if positional {
            k
        } else {
            self.u.len() - 1
        }
    }

    /// Hidden state of every node, one row per node id.
    pub fn embed(&self, t: &mut Tape, g: &RelGraph, tokens: &[usize]) -> Result<Var, ModelError> {
        assert_eq!(tokens.len(), g.len(), "one token per node");
        let d = self.dim;
        if g.is_empty() {
            return Ok(t.constant(amn_tensor::Matrix::zeros(0, d)));
        }
        let layers = g.topo_layers().map_err(|e| ModelError::Graph(e.to_string()))?;
        let (emb, w, b) = (t.param(self.embedding), t.param(self.w), t.param(self.b));
        let mut row_of = vec![usize::MAX; g.len()];
        let mut h_all: Option<Var> = None;
        let mut c_all: Option<Var> = None;
        let mut filled = 0;
        for layer in &layers {
            let n = layer.len();
            let toks: Vec<usize> = layer.iter().map(|v| tokens[v.index()]).collect();
            let x = t.gather_rows(emb, &toks);
            let a = t.matmul(x, w);
            let a = t.add_row(a, b);
            // group the layer's incoming edges by type
            let mut groups: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); self.u.len()];
            for (j, v) in layer.iter().enumerate() {
                let node = g.node(*v);
                let positional = node.is_positional();
                for (k, arg) in node.args.iter().enumerate() {
                    let e = self.edge_type(positional, k);
                    if positional && e + 1 >= self.u.len() {
                        return Err(ModelError::Arity { arity: node.arity(), max: self.u.len() - 1 });
                    }
                    groups[e].0.push(j);
                    groups[e].1.push(row_of[arg.index()]);
                }
            }
            let gates = t.slice_cols(a, 0, 3 * d);
            let (mut z, mut csum) = (gates, None);
            if let (Some(h_prev), Some(c_prev)) = (h_all, c_all) {
                let mut parts = Vec::new();
                let mut parents = Vec::new();
                let mut children = Vec::new();
                for (e, (ps, cs)) in groups.iter().enumerate() {
                    if ps.is_empty() {
                        continue;
                    }
                    let hc = t.gather_rows(h_prev, cs);
                    let ue = t.param(self.u[e]);
                    parts.push(t.matmul(hc, ue));
                    parents.extend_from_slice(ps);
                    children.extend_from_slice(cs);
                }
                if !parts.is_empty() {
                    let gu = if parts.len() == 1 { parts[0] } else { t.concat_rows(&parts) };
                    let gu_gates = t.slice_cols(gu, 0, 3 * d);
                    let summed = t.scatter_add_rows(gu_gates, &parents, n);
                    z = t.add(gates, summed);
                    let gu_f = t.slice_cols(gu, F * d, d);
                    let a_f = t.slice_cols(a, F * d, d);
                    let a_f = t.gather_rows(a_f, &parents);
                    let f = t.add(gu_f, a_f);
                    let f = t.sigmoid(f);
                    let cc = t.gather_rows(c_prev, &children);
                    let fc = t.mul(f, cc);
                    csum = Some(t.scatter_add_rows(fc, &parents, n));
                }
            }
            let io = t.slice_cols(z, I * d, 2 * d);
            let io = t.sigmoid(io);
            let i = t.slice_cols(io, 0, d);
            let o = t.slice_cols(io, (O - I) * d, d);
            let ch = t.slice_cols(z, C * d, d);
            let ch = t.tanh(ch);
            let mut c = t.mul(i, ch);
            if let Some(s) = csum {
                c = t.add(c, s);
            }
            let tc = t.tanh(c);
            let h = t.mul(o, tc);
            for (j, v) in layer.iter().enumerate() {
                row_of[v.index()] = filled + j;
            }
            filled += n;
            h_all = Some(match h_all {
                Some(p) => t.concat_rows(&[p, h]),
                None => h,
            });
            c_all = Some(match c_all {
                Some(p) => t.concat_rows(&[p, c]),
                None => c,
            });
        }
        let h = h_all.expect("non-empty graph");
        Ok(t.gather_rows(h, &row_of))
    }
}
