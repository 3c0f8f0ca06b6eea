//! Brute-force reference implementations used to cross-check the library.
//! Everything here works from node argument lists only.

#![allow(dead_code)]

use std::collections::BTreeSet;

use amn_core::{NodeId, NodeKind, RelGraph};

pub type Pairs = BTreeSet<(NodeId, NodeId)>;

fn parents_of(g: &RelGraph, v: NodeId) -> Vec<NodeId> {
    g.nodes().iter().filter(|n| n.args.contains(&v)).map(|n| n.id).collect()
}

/// All nodes reachable by following arguments, including `v`.
pub fn descendants(g: &RelGraph, v: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            stack.extend(g.node(x).args.iter().copied());
        }
    }
    seen
}

/// Proper ancestors of `v`.
pub fn ancestors(g: &RelGraph, v: NodeId) -> BTreeSet<NodeId> {
    g.nodes()
        .iter()
        .map(|n| n.id)
        .filter(|&u| u != v && descendants(g, u).contains(&v))
        .collect()
}

fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn is_relation(k: NodeKind) -> bool {
    matches!(k, NodeKind::Predicate | NodeKind::Attribute)
}

/// Whether a pair could ever appear in an error-free mapping on local grounds.
pub fn locally_compatible(base: &RelGraph, target: &RelGraph, b: NodeId, t: NodeId) -> bool {
    let (x, y) = (base.node(b), target.node(t));
    let shape = x.args.len() == y.args.len() && x.is_positional() == y.is_positional();
    match (x.kind, y.kind) {
        (NodeKind::Entity, NodeKind::Entity) => true,
        (NodeKind::Function, NodeKind::Function) => shape,
        (kx, ky) if is_relation(kx) && is_relation(ky) => shape && x.label == y.label,
        _ => false,
    }
}

/// Every locally compatible pair.
pub fn hypotheses(base: &RelGraph, target: &RelGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for b in base.nodes() {
        for t in target.nodes() {
            if locally_compatible(base, target, b.id, t.id) {
                out.push((b.id, t.id));
            }
        }
    }
    out
}

/// One-to-one, parallel connectivity, tiered identicality and no degenerate pair.
pub fn error_free(base: &RelGraph, target: &RelGraph, m: &Pairs) -> bool {
    let bs: Vec<NodeId> = m.iter().map(|p| p.0).collect();
    let ts: Vec<NodeId> = m.iter().map(|p| p.1).collect();
    if bs.iter().collect::<BTreeSet<_>>().len() != bs.len() || ts.iter().collect::<BTreeSet<_>>().len() != ts.len() {
        return false;
    }
    for &(b, t) in m {
        let (x, y) = (base.node(b), target.node(t));
        if !locally_compatible(base, target, b, t) {
            return false;
        }
        if x.kind == NodeKind::Entity {
            let pb = parents_of(base, b).into_iter().any(|p| bs.contains(&p));
            let pt = parents_of(target, t).into_iter().any(|p| ts.contains(&p));
            if !(pb && pt) {
                return false;
            }
            continue;
        }
        let connected = if x.is_positional() {
            x.args.iter().zip(&y.args).all(|(&a, &c)| m.contains(&(a, c)))
        } else {
            permutations(&y.args)
                .iter()
                .any(|p| x.args.iter().zip(p).all(|(&a, &c)| m.contains(&(a, c))))
        };
        if !connected {
            return false;
        }
        if x.kind == NodeKind::Function && x.label != y.label {
            let supported = parents_of(base, b)
                .iter()
                .any(|&p| parents_of(target, t).iter().any(|&q| m.contains(&(p, q))));
            if !supported {
                return false;
            }
        }
    }
    true
}

/// Score of an error-free mapping: roots are members with no other member
/// above them on either side; each contributes its base subgraph size.
pub fn dfs_score(base: &RelGraph, target: &RelGraph, m: &Pairs) -> u64 {
    m.iter()
        .filter(|&&(b, t)| {
            let (ab, at) = (ancestors(base, b), ancestors(target, t));
            !m.iter().any(|&(b2, t2)| ab.contains(&b2) || at.contains(&t2))
        })
        .map(|&(b, _)| descendants(base, b).len() as u64)
        .sum()
}

/// Best score over every error-free subset of the hypotheses.
pub fn exhaustive_best(base: &RelGraph, target: &RelGraph) -> (u64, Pairs) {
    let hyps = hypotheses(base, target);
    assert!(hyps.len() <= 20, "exhaustive oracle is only for tiny instances");
    let mut best = (0, Pairs::new());
    for mask in 0u32..(1 << hyps.len()) {
        let m: Pairs = (0..hyps.len()).filter(|i| mask >> i & 1 == 1).map(|i| hyps[i]).collect();
        if error_free(base, target, &m) {
            let s = dfs_score(base, target, &m);
            if s > best.0 {
                best = (s, m);
            }
        }
    }
    best
}

/// Least fixed point: unmatched nodes with a matched descendant, or with an
/// ancestor already in the set.
pub fn ci_closure(base: &RelGraph, m: &Pairs) -> BTreeSet<NodeId> {
    let matched: BTreeSet<NodeId> = m.iter().map(|p| p.0).collect();
    let mut ci = BTreeSet::new();
    loop {
        let mut changed = false;
        for n in base.nodes() {
            if matched.contains(&n.id) || ci.contains(&n.id) {
                continue;
            }
            let below = descendants(base, n.id).iter().any(|d| *d != n.id && matched.contains(d));
            let above = ancestors(base, n.id).iter().any(|a| ci.contains(a));
            if below || above {
                ci.insert(n.id);
                changed = true;
            }
        }
        if !changed {
            return ci;
        }
    }
}
