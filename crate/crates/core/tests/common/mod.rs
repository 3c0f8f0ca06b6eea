#![allow(dead_code)]

pub mod oracle;

use amn_core::ir::{GraphBuilder, NodeKind};
use amn_core::synth::{GenParams, Span};
use amn_core::RelGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator settings that keep most instances within a dozen hypotheses.
pub fn tiny_params() -> GenParams {
    GenParams {
        max_layers: 3,
        nodes_per_layer: Span::new(1, 2),
        entities_per_dag: Span::new(1, 2),
        count_shared_dags: Span::new(1, 1),
        extension_layers: Span::new(1, 1),
        extension_nodes_per_layer: Span::new(1, 2),
        private_entities: Span::new(0, 1),
        symbols_per_class: 2,
        ..GenParams::default()
    }
}

const SYMBOLS: [(&str, NodeKind, usize, bool); 7] = [
    ("P", NodeKind::Predicate, 2, true),
    ("Q", NodeKind::Predicate, 2, true),
    ("R", NodeKind::Predicate, 2, false),
    ("F", NodeKind::Function, 1, true),
    ("G", NodeKind::Function, 1, true),
    ("H", NodeKind::Function, 2, true),
    ("A", NodeKind::Attribute, 1, true),
];

/// A random graph over a fixed small vocabulary.
pub fn random_graph(rng: &mut impl Rng, entities: usize, expressions: usize) -> RelGraph {
    let mut b = GraphBuilder::new();
    let mut ids = Vec::new();
    for i in 0..entities.max(1) {
        ids.push(b.entity(&format!("e{i}")).unwrap());
    }
    for _ in 0..expressions {
        let &(label, kind, arity, ordered) = SYMBOLS.choose(rng).unwrap();
        if arity > ids.len() {
            continue;
        }
        let args: Vec<_> = ids.choose_multiple(rng, arity).copied().collect();
        let (id, new) = b.add(label, kind, ordered, args).unwrap();
        if new {
            ids.push(id);
        }
    }
    b.build().unwrap()
}

pub fn random_pair(seed: u64, max_entities: usize, max_expressions: usize) -> (RelGraph, RelGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e1 = rng.gen_range(1..=max_entities);
    let x1 = rng.gen_range(1..=max_expressions);
    let e2 = rng.gen_range(1..=max_entities);
    let x2 = rng.gen_range(1..=max_expressions);
    (random_graph(&mut rng, e1, x1), random_graph(&mut rng, e2, x2))
}
