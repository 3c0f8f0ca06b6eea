#![allow(dead_code)]

use amn_core::encoding::EncodingConfig;
use amn_core::ir::parse_sexpr;
use amn_core::RelGraph;
use amn_model::dag_lstm::DagLstm;
use amn_model::ModelConfig;
use amn_tensor::ParamStore;

/// A model small enough for exhaustive finite-difference checks.
pub fn small_config() -> ModelConfig {
    ModelConfig {
        node_dim: 4,
        heads: 2,
        attn_dim: 8,
        value_hidden: 6,
        encoding: EncodingConfig { label_pool: 4, entity_ids: 8, max_arity: 3 },
        ..ModelConfig::default()
    }
}

pub fn load(name: &str) -> RelGraph {
    let path = format!("{}/../../data/{name}.sexp", env!("CARGO_MANIFEST_DIR"));
    parse_sexpr(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Node-at-a-time DAG LSTM written directly from the gate equations.
pub fn dag_lstm_reference(lstm: &DagLstm, store: &ParamStore, g: &RelGraph, tokens: &[usize]) -> Vec<Vec<f64>> {
    let d = lstm.dim;
    let emb = store.value(lstm.embedding);
    let w = store.value(lstm.w);
    let b = store.value(lstm.b);
    // column `gate * d + j` of x·M
    let lin = |x: &[f64], m: &amn_tensor::Matrix, gate: usize, j: usize| -> f64 {
        (0..d).map(|k| x[k] * m.get(k, gate * d + j)).sum()
    };
    let mut h: Vec<Option<Vec<f64>>> = vec![None; g.len()];
    let mut c: Vec<Option<Vec<f64>>> = vec![None; g.len()];
    let mut remaining: Vec<usize> = (0..g.len()).collect();
    while !remaining.is_empty() {
        let mut next = Vec::new();
        for &v in &remaining {
            let node = &g.nodes()[v];
            if node.args.iter().any(|a| h[a.index()].is_none()) {
                next.push(v);
                continue;
            }
            let s = emb.row(tokens[v]).to_vec();
            let mut pre = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
            let mut cell = vec![0.0; d];
            for gate in 0..3 {
                for j in 0..d {
                    pre[gate][j] = lin(&s, w, gate, j) + b.get(0, gate * d + j);
                }
            }
            for (k, a) in node.args.iter().enumerate() {
                let u = store.value(lstm.u[lstm.edge_type(node.is_positional(), k)]);
                let hw = h[a.index()].as_ref().unwrap();
                let cw = c[a.index()].as_ref().unwrap();
                for gate in 0..3 {
                    for j in 0..d {
                        pre[gate][j] += lin(hw, u, gate, j);
                    }
                }
                for j in 0..d {
                    let f = sigmoid(lin(&s, w, 3, j) + lin(hw, u, 3, j) + b.get(0, 3 * d + j));
                    cell[j] += f * cw[j];
                }
            }
            let mut hv = vec![0.0; d];
            for j in 0..d {
                cell[j] += sigmoid(pre[0][j]) * pre[2][j].tanh();
                hv[j] = sigmoid(pre[1][j]) * cell[j].tanh();
            }
            h[v] = Some(hv);
            c[v] = Some(cell);
        }
        assert!(next.len() < remaining.len(), "cycle");
        remaining = next;
    }
    h.into_iter().map(Option::unwrap).collect()
}
