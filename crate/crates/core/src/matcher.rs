//! Constraint-satisfying structural matcher used as the symbolic ground truth.
//!
//! An error-free correspondence set is the union of the parallel-connectivity
//! closures ("kernels") of its root correspondences, and its score is the sum
//! of the root subgraph sizes. The exact solver enumerates every kernel and
//! runs branch-and-bound over pairwise-compatible kernel sets; the greedy
//! solver merges the largest kernels first.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ir::{Correspondence, Mapping, NodeId, NodeKind, RelGraph};
use crate::smt::{self, CorrSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisKind {
    Entity,
    IdenticalPredicate,
    TieredFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchHypothesis {
    pub base: NodeId,
    pub target: NodeId,
    pub kind: HypothesisKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Greedy,
}

/// Limits for the exact search.
///
/// Instances with at most `max_hypotheses` hypotheses are always solved to
/// optimality; larger ones are attempted until `max_nodes` search nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_hypotheses: usize,
    pub max_nodes: u64,
    pub mode: SearchMode,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_hypotheses: 24, max_nodes: 5_000_000, mode: SearchMode::Exact }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error("exact search exceeded {nodes} nodes ({hypotheses} hypotheses); fall back to greedy")]
    BudgetExceeded { nodes: u64, hypotheses: usize },
}

fn hypothesis_kind(base: &RelGraph, target: &RelGraph, b: NodeId, t: NodeId) -> Option<HypothesisKind> {
    let nb = base.node(b);
    let nt = target.node(t);
    let same_shape = nb.arity() == nt.arity() && nb.is_positional() == nt.is_positional();
    match (nb.kind, nt.kind) {
        (NodeKind::Entity, NodeKind::Entity) => Some(HypothesisKind::Entity),
        (NodeKind::Function, NodeKind::Function) if same_shape => Some(HypothesisKind::TieredFunction),
        (NodeKind::Predicate | NodeKind::Attribute, NodeKind::Predicate | NodeKind::Attribute)
            if same_shape && nb.label == nt.label =>
        {
            Some(HypothesisKind::IdenticalPredicate)
        }
        _ => None,
    }
}

/// All locally admissible base/target pairs, sorted by (base, target).
pub fn enumerate_hypotheses(base: &RelGraph, target: &RelGraph) -> Vec<MatchHypothesis> {
    let mut out = Vec::new();
    for b in base.ids() {
        for t in target.ids() {
            if let Some(kind) = hypothesis_kind(base, target, b, t) {
                out.push(MatchHypothesis { base: b, target: t, kind });
            }
        }
    }
    out
}

/// A parallel-connectivity-closed correspondence set grown from one root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    pub root: Correspondence,
    pub pairs: CorrSet,
    pub weight: u64,
    forward: HashMap<NodeId, NodeId>,
    backward: HashMap<NodeId, NodeId>,
}

impl Kernel {
    fn new(root: Correspondence, pairs: CorrSet, weight: u64) -> Self {
        let forward = pairs.iter().copied().collect();
        let backward = pairs.iter().map(|&(b, t)| (t, b)).collect();
        Kernel { root, pairs, weight, forward, backward }
    }

    /// Union is one-to-one and neither root sits inside the other kernel.
    pub fn compatible(&self, other: &Kernel) -> bool {
        if self.pairs.contains(&other.root) || other.pairs.contains(&self.root) {
            return false;
        }
        let (small, large) = if self.pairs.len() <= other.pairs.len() { (self, other) } else { (other, self) };
        small.pairs.iter().all(|&(b, t)| {
            large.forward.get(&b).is_none_or(|&t2| t2 == t)
                && large.backward.get(&t).is_none_or(|&b2| b2 == b)
        })
    }
}

#[derive(Clone)]
struct Partial {
    forward: HashMap<NodeId, NodeId>,
    backward: HashMap<NodeId, NodeId>,
    pending: Vec<Correspondence>,
}

struct KernelBuilder<'a> {
    base: &'a RelGraph,
    target: &'a RelGraph,
    nodes: u64,
    limit: Option<u64>,
}

impl KernelBuilder<'_> {
    fn tick(&mut self) -> Result<(), ()> {
        self.nodes += 1;
        match self.limit {
            Some(l) if self.nodes > l => Err(()),
            _ => Ok(()),
        }
    }

    fn pair_ok(&self, b: NodeId, t: NodeId, is_root: bool) -> bool {
        let nb = self.base.node(b);
        let nt = self.target.node(t);
        match hypothesis_kind(self.base, self.target, b, t) {
            None => false,
            Some(HypothesisKind::TieredFunction) if is_root => nb.label == nt.label,
            Some(_) => true,
        }
    }

    /// Every closure of `root`, branching over argument bijections of
    /// unordered nodes. Returns an empty list when the root cannot be closed.
    fn closures(&mut self, root: Correspondence) -> Result<Vec<CorrSet>, ()> {
        if !self.pair_ok(root.0, root.1, true) {
            return Ok(Vec::new());
        }
        let start = Partial { forward: HashMap::new(), backward: HashMap::new(), pending: vec![root] };
        let mut out = Vec::new();
        self.expand(start, &mut out)?;
        Ok(out)
    }

    fn expand(&mut self, mut st: Partial, out: &mut Vec<CorrSet>) -> Result<(), ()> {
        self.tick()?;
        while let Some((b, t)) = st.pending.pop() {
            match (st.forward.get(&b), st.backward.get(&t)) {
                (Some(&t2), _) if t2 == t => continue,
                (Some(_), _) | (_, Some(_)) => return Ok(()),
                _ => {}
            }
            if !self.pair_ok(b, t, false) {
                return Ok(());
            }
            st.forward.insert(b, t);
            st.backward.insert(t, b);
            let nb = self.base.node(b);
            let nt = self.target.node(t);
            if nb.is_positional() {
                st.pending.extend(nb.args.iter().copied().zip(nt.args.iter().copied()));
            } else {
                for perm in permutations(nt.args.len()) {
                    let mut branch = st.clone();
                    branch
                        .pending
                        .extend(nb.args.iter().copied().zip(perm.iter().map(|&j| nt.args[j])));
                    self.expand(branch, out)?;
                }
                return Ok(());
            }
        }
        out.push(st.forward.into_iter().collect());
        Ok(())
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn expression_roots(hyps: &[MatchHypothesis]) -> impl Iterator<Item = Correspondence> + '_ {
    hyps.iter().filter(|h| h.kind != HypothesisKind::Entity).map(|h| (h.base, h.target))
}

/// Enumerates every kernel rooted at an expression hypothesis.
pub fn enumerate_kernels(base: &RelGraph, target: &RelGraph) -> Vec<Kernel> {
    let hyps = enumerate_hypotheses(base, target);
    let mut kb = KernelBuilder { base, target, nodes: 0, limit: None };
    all_kernels(&mut kb, &hyps).expect("unbounded enumeration cannot fail")
}

fn all_kernels(kb: &mut KernelBuilder<'_>, hyps: &[MatchHypothesis]) -> Result<Vec<Kernel>, ()> {
    let sizes = kb.base.subgraph_sizes();
    let mut kernels = Vec::new();
    for root in expression_roots(hyps) {
        let mut closures = kb.closures(root)?;
        closures.sort();
        closures.dedup();
        kernels.extend(closures.into_iter().map(|c| Kernel::new(root, c, sizes[root.0.index()] as u64)));
    }
    Ok(kernels)
}

fn finish(base: &RelGraph, target: &RelGraph, pairs: CorrSet) -> Mapping {
    let breakdown = smt::score(base, target, &pairs);
    let inferences = smt::candidate_inferences(base, &pairs);
    Mapping { correspondences: pairs, inferences, score: breakdown.total }
}

#[derive(Debug, Clone)]
struct Best {
    weight: u64,
    pairs: CorrSet,
}

impl Best {
    /// Higher score, then fewer correspondences, then lexicographically smaller.
    fn improves_on(&self, other: &Best) -> bool {
        (self.weight, std::cmp::Reverse(self.pairs.len())) > (other.weight, std::cmp::Reverse(other.pairs.len()))
            || (self.weight == other.weight
                && self.pairs.len() == other.pairs.len()
                && self.pairs.iter().lt(other.pairs.iter()))
    }
}

struct Search<'a> {
    kernels: &'a [Kernel],
    compat: Vec<Vec<bool>>,
    best: Best,
    nodes: u64,
    limit: Option<u64>,
}

impl Search<'_> {
    fn run(&mut self, cands: &[usize], chosen: &mut Vec<usize>, weight: u64) -> Result<(), ()> {
        self.nodes += 1;
        if self.limit.is_some_and(|l| self.nodes > l) {
            return Err(());
        }
        let bound = weight + cands.iter().map(|&c| self.kernels[c].weight).sum::<u64>();
        if bound < self.best.weight {
            return Ok(());
        }
        let Some((&first, rest)) = cands.split_first() else {
            let mut pairs = CorrSet::new();
            for &k in chosen.iter() {
                pairs.extend(self.kernels[k].pairs.iter().copied());
            }
            let leaf = Best { weight, pairs };
            if leaf.improves_on(&self.best) {
                self.best = leaf;
            }
            return Ok(());
        };
        let with: Vec<usize> = rest.iter().copied().filter(|&c| self.compat[first][c]).collect();
        chosen.push(first);
        self.run(&with, chosen, weight + self.kernels[first].weight)?;
        chosen.pop();
        self.run(rest, chosen, weight)
    }
}

/// Maximum-score error-free mapping.
///
/// Ties are broken by fewer correspondences, then by the lexicographically
/// smallest sorted `(base, target)` sequence.
pub fn solve_exact(base: &RelGraph, target: &RelGraph, budget: &SearchBudget) -> Result<Mapping, MatchError> {
    let hyps = enumerate_hypotheses(base, target);
    let limit = (hyps.len() > budget.max_hypotheses).then_some(budget.max_nodes);
    let exceeded = |nodes| MatchError::BudgetExceeded { nodes, hypotheses: hyps.len() };

    let mut kb = KernelBuilder { base, target, nodes: 0, limit };
    let mut kernels = all_kernels(&mut kb, &hyps).map_err(|_| exceeded(kb.nodes))?;
    kernels.sort_by(|a, b| b.weight.cmp(&a.weight).then_with(|| a.root.cmp(&b.root)).then_with(|| a.pairs.cmp(&b.pairs)));

    let n = kernels.len();
    let mut compat = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let ok = kernels[i].compatible(&kernels[j]);
            compat[i][j] = ok;
            compat[j][i] = ok;
        }
    }
    let mut search = Search {
        kernels: &kernels,
        compat,
        best: Best { weight: 0, pairs: CorrSet::new() },
        nodes: kb.nodes,
        limit,
    };
    let all: Vec<usize> = (0..n).collect();
    search.run(&all, &mut Vec::new(), 0).map_err(|_| exceeded(search.nodes))?;
    let mapping = finish(base, target, search.best.pairs);
    debug_assert_eq!(mapping.score, search.best.weight);
    Ok(mapping)
}

/// Merges the largest kernel per hypothesis in descending score order,
/// skipping any that would conflict with what has been merged.
pub fn solve_greedy(base: &RelGraph, target: &RelGraph) -> Mapping {
    let hyps = enumerate_hypotheses(base, target);
    let sizes = base.subgraph_sizes();
    let mut kb = KernelBuilder { base, target, nodes: 0, limit: None };
    let mut kernels: Vec<Kernel> = expression_roots(&hyps)
        .filter_map(|root| {
            let closures = kb.closures(root).expect("unbounded");
            closures
                .into_iter()
                .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
                .map(|c| Kernel::new(root, c, sizes[root.0.index()] as u64))
        })
        .collect();
    kernels.sort_by(|a, b| b.weight.cmp(&a.weight).then_with(|| a.root.cmp(&b.root)));

    let mut chosen: Vec<&Kernel> = Vec::new();
    for k in &kernels {
        if chosen.iter().all(|c| c.compatible(k)) {
            chosen.push(k);
        }
    }
    let pairs: CorrSet = chosen.iter().flat_map(|k| k.pairs.iter().copied()).collect();
    finish(base, target, pairs)
}

/// Exact search under `budget`, falling back to greedy when it runs out.
pub fn solve(base: &RelGraph, target: &RelGraph, budget: &SearchBudget) -> Mapping {
    match budget.mode {
        SearchMode::Greedy => solve_greedy(base, target),
        SearchMode::Exact => solve_exact(base, target, budget).unwrap_or_else(|_| solve_greedy(base, target)),
    }
}

/// Union of the base nodes covered by a mapping's correspondences.
pub fn covered_base(m: &Mapping) -> BTreeSet<NodeId> {
    m.matched_base()
}
