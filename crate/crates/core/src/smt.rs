//! Structure-mapping constraints, structural evaluation and candidate inferences.
//!
//! Everything here is a pure function of a base graph, a target graph and a
//! correspondence set; the matcher, the generator and the evaluation harness
//! all defer to these definitions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{Correspondence, NodeId, NodeKind, RelGraph};

pub type CorrSet = BTreeSet<Correspondence>;

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("node {0} is not a candidate inference of this mapping")]
    NotCandidateInference(NodeId),
    #[error("unknown base node {0}")]
    UnknownNode(NodeId),
}

/// Violations grouped by constraint. Empty in every field means error-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub one_to_one: Vec<(Correspondence, Correspondence)>,
    pub parallel_connectivity: Vec<Correspondence>,
    pub identicality: Vec<Correspondence>,
    pub degenerate: Vec<Correspondence>,
}

impl ViolationReport {
    pub fn is_error_free(&self) -> bool {
        self.one_to_one.is_empty()
            && self.parallel_connectivity.is_empty()
            && self.identicality.is_empty()
            && self.degenerate.is_empty()
    }

    /// Distinct correspondences involved in a one-to-one conflict.
    pub fn one_to_one_members(&self) -> BTreeSet<Correspondence> {
        self.one_to_one.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootScore {
    pub base: NodeId,
    pub target: NodeId,
    pub size: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub valid: CorrSet,
    pub roots: CorrSet,
    pub total: u64,
    pub per_root: Vec<RootScore>,
}

/// Every pair of correspondences that share a base node or a target node.
pub fn check_one_to_one(m: &CorrSet) -> Vec<(Correspondence, Correspondence)> {
    let mut by_base: BTreeMap<NodeId, Vec<Correspondence>> = BTreeMap::new();
    let mut by_target: BTreeMap<NodeId, Vec<Correspondence>> = BTreeMap::new();
    for &c in m {
        by_base.entry(c.0).or_default().push(c);
        by_target.entry(c.1).or_default().push(c);
    }
    let mut out = BTreeSet::new();
    for group in by_base.values().chain(by_target.values()) {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                out.insert((a.min(b), a.max(b)));
            }
        }
    }
    out.into_iter().collect()
}

/// Whether the arguments of `b` and `t` can be paired inside `m`, honouring
/// argument order for ordered nodes. `accept` filters which argument pairs count.
fn args_connected(
    base: &RelGraph,
    target: &RelGraph,
    b: NodeId,
    t: NodeId,
    m: &CorrSet,
    accept: &mut dyn FnMut(NodeId, NodeId) -> bool,
) -> bool {
    let nb = base.node(b);
    let nt = target.node(t);
    if nb.arity() != nt.arity() || nb.is_positional() != nt.is_positional() {
        return false;
    }
    if nb.is_positional() {
        return nb
            .args
            .iter()
            .zip(&nt.args)
            .all(|(&x, &y)| m.contains(&(x, y)) && accept(x, y));
    }
    let k = nb.arity();
    let mut adj = vec![Vec::new(); k];
    for (i, &x) in nb.args.iter().enumerate() {
        for (j, &y) in nt.args.iter().enumerate() {
            if m.contains(&(x, y)) && accept(x, y) {
                adj[i].push(j);
            }
        }
    }
    perfect_matching(&adj, k)
}

/// Kuhn's augmenting-path check for a perfect matching on a k×k bipartite graph.
fn perfect_matching(adj: &[Vec<usize>], k: usize) -> bool {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; k];
    (0..k).all(|u| augment(u, adj, &mut vec![false; k], &mut owner))
}

fn is_expression(g: &RelGraph, v: NodeId) -> bool {
    !g.node(v).is_entity()
}

/// Correspondences between expressions whose arguments are not matched in
/// parallel. Pairs mixing an entity with an expression also violate it.
pub fn check_parallel_connectivity(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> Vec<Correspondence> {
    m.iter()
        .copied()
        .filter(|&(b, t)| {
            let (eb, et) = (is_expression(base, b), is_expression(target, t));
            match (eb, et) {
                (false, false) => false,
                (true, true) => !args_connected(base, target, b, t, m, &mut |_, _| true),
                _ => true,
            }
        })
        .collect()
}

fn has_matched_parent_pair(base: &RelGraph, target: &RelGraph, b: NodeId, t: NodeId, m: &CorrSet) -> bool {
    base.parents(b)
        .iter()
        .any(|&pb| target.parents(t).iter().any(|&pt| m.contains(&(pb, pt))))
}

fn identical_ok(base: &RelGraph, target: &RelGraph, b: NodeId, t: NodeId, m: &CorrSet) -> bool {
    let nb = base.node(b);
    let nt = target.node(t);
    match (nb.kind, nt.kind) {
        (NodeKind::Entity, NodeKind::Entity) => true,
        (NodeKind::Function, NodeKind::Function) => {
            nb.label == nt.label || has_matched_parent_pair(base, target, b, t, m)
        }
        (kb, kt) if kb == kt => nb.label == nt.label,
        // attributes are compared like predicates
        (NodeKind::Attribute, NodeKind::Predicate) | (NodeKind::Predicate, NodeKind::Attribute) => {
            nb.label == nt.label
        }
        _ => false,
    }
}

/// Correspondences breaking tiered identicality: relations must share a
/// label, functions may differ when a parent correspondence supports them,
/// entities always pass, and kinds may not be mixed.
pub fn check_tiered_identicality(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> Vec<Correspondence> {
    m.iter().copied().filter(|&(b, t)| !identical_ok(base, target, b, t, m)).collect()
}

fn parent_participates_base(base: &RelGraph, b: NodeId, matched: &BTreeSet<NodeId>) -> bool {
    base.parents(b).iter().any(|p| matched.contains(p))
}

/// Entity correspondences where either side has no parent taking part in `m`.
pub fn find_degenerate(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> Vec<Correspondence> {
    let mb: BTreeSet<NodeId> = m.iter().map(|c| c.0).collect();
    let mt: BTreeSet<NodeId> = m.iter().map(|c| c.1).collect();
    m.iter()
        .copied()
        .filter(|&(b, t)| {
            base.node(b).is_entity()
                && target.node(t).is_entity()
                && (!parent_participates_base(base, b, &mb) || !parent_participates_base(target, t, &mt))
        })
        .collect()
}

pub fn violations(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> ViolationReport {
    ViolationReport {
        one_to_one: check_one_to_one(m),
        parallel_connectivity: check_parallel_connectivity(base, target, m),
        identicality: check_tiered_identicality(base, target, m),
        degenerate: find_degenerate(base, target, m),
    }
}

pub fn is_error_free(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> bool {
    violations(base, target, m).is_error_free()
}

struct Validator<'a> {
    base: &'a RelGraph,
    target: &'a RelGraph,
    m: &'a CorrSet,
    base_count: HashMap<NodeId, usize>,
    target_count: HashMap<NodeId, usize>,
    memo: HashMap<Correspondence, bool>,
    degenerate: BTreeSet<Correspondence>,
}

impl<'a> Validator<'a> {
    fn new(base: &'a RelGraph, target: &'a RelGraph, m: &'a CorrSet) -> Self {
        let mut base_count = HashMap::new();
        let mut target_count = HashMap::new();
        for &(b, t) in m {
            *base_count.entry(b).or_insert(0) += 1;
            *target_count.entry(t).or_insert(0) += 1;
        }
        Validator {
            base,
            target,
            m,
            base_count,
            target_count,
            memo: HashMap::new(),
            degenerate: find_degenerate(base, target, m).into_iter().collect(),
        }
    }

    /// Identicality and parallel connectivity over the whole rooted subgraph pair.
    fn structurally_ok(&mut self, b: NodeId, t: NodeId) -> bool {
        if let Some(&v) = self.memo.get(&(b, t)) {
            return v;
        }
        // provisional entry guards against revisiting through shared children
        self.memo.insert((b, t), false);
        let ok = identical_ok(self.base, self.target, b, t, self.m)
            && match (is_expression(self.base, b), is_expression(self.target, t)) {
                (false, false) => true,
                (true, true) => {
                    let (base, target, m) = (self.base, self.target, self.m);
                    args_connected(base, target, b, t, m, &mut |x, y| self.structurally_ok(x, y))
                }
                _ => false,
            };
        self.memo.insert((b, t), ok);
        ok
    }

    fn one_to_one_within(&self, b: NodeId, t: NodeId) -> bool {
        let sb = self.base.rooted_subgraph(b).unwrap_or_default();
        let st = self.target.rooted_subgraph(t).unwrap_or_default();
        sb.iter().all(|x| self.base_count.get(x).copied().unwrap_or(0) <= 1)
            && st.iter().all(|y| self.target_count.get(y).copied().unwrap_or(0) <= 1)
    }

    fn valid(&mut self, b: NodeId, t: NodeId) -> bool {
        !self.degenerate.contains(&(b, t)) && self.one_to_one_within(b, t) && self.structurally_ok(b, t)
    }
}

/// Structural evaluation: valid correspondences, their roots, and the summed
/// rooted-subgraph sizes of the roots (shared descendants count once per root).
pub fn score(base: &RelGraph, target: &RelGraph, m: &CorrSet) -> ScoreBreakdown {
    let mut validator = Validator::new(base, target, m);
    let valid: CorrSet = m.iter().copied().filter(|&(b, t)| validator.valid(b, t)).collect();

    let mut roots = CorrSet::new();
    for &(b, t) in &valid {
        let anc_b = base.ancestors(b);
        let anc_t = target.ancestors(t);
        let dominated = valid
            .iter()
            .any(|&(b2, t2)| (b2, t2) != (b, t) && (anc_b.contains(&b2) || anc_t.contains(&t2)));
        if !dominated {
            roots.insert((b, t));
        }
    }
    let per_root: Vec<RootScore> = roots
        .iter()
        .map(|&(b, t)| RootScore {
            base: b,
            target: t,
            size: base.rooted_subgraph(b).map_or(0, |s| s.len() as u64),
        })
        .collect();
    let total = per_root.iter().map(|r| r.size).sum();
    ScoreBreakdown { valid, roots, total, per_root }
}

/// Unmatched base nodes with structural support: those with a matched
/// descendant, closed downward over unmatched descendants.
pub fn candidate_inferences(base: &RelGraph, m: &CorrSet) -> BTreeSet<NodeId> {
    let n = base.len();
    let mut matched = vec![false; n];
    for &(b, _) in m {
        if b.index() < n {
            matched[b.index()] = true;
        }
    }
    let layers = base.topo_layers().unwrap_or_default();
    let mut below = vec![false; n];
    for v in layers.iter().flatten() {
        below[v.index()] = base.node(*v).args.iter().any(|a| matched[a.index()] || below[a.index()]);
    }
    // ancestry of a candidate inference passes through matched nodes too
    let mut ci = vec![false; n];
    let mut under_ci = vec![false; n];
    for v in layers.iter().rev().flatten() {
        let i = v.index();
        under_ci[i] = base.parents(*v).iter().any(|p| ci[p.index()] || under_ci[p.index()]);
        ci[i] = !matched[i] && (below[i] || under_ci[i]);
    }
    (0..n).filter(|&i| ci[i]).map(NodeId).collect()
}

/// A candidate inference carried over into the target's vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projected {
    Expr { label: String, args: Vec<Projected> },
    /// An existing target node.
    Target(NodeId),
    /// A fresh placeholder for an unmatched base entity.
    Skolem(usize),
}

impl Projected {
    pub fn skolem_count(&self) -> usize {
        let mut seen = BTreeSet::new();
        self.collect_skolems(&mut seen);
        seen.len()
    }

    fn collect_skolems(&self, out: &mut BTreeSet<usize>) {
        match self {
            Projected::Skolem(k) => {
                out.insert(*k);
            }
            Projected::Expr { args, .. } => args.iter().for_each(|a| a.collect_skolems(out)),
            Projected::Target(_) => {}
        }
    }

    /// Like `Display`, but target references are expanded to their expressions.
    pub fn render_in(&self, target: &RelGraph) -> String {
        match self {
            Projected::Expr { label, args } => {
                let a: Vec<String> = args.iter().map(|x| x.render_in(target)).collect();
                format!("({label} {})", a.join(" "))
            }
            Projected::Target(t) => target.render(*t),
            Projected::Skolem(k) => format!("?sk{k}"),
        }
    }
}

impl fmt::Display for Projected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projected::Expr { label, args } => {
                write!(f, "{label}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Projected::Target(t) => write!(f, "[{t}]"),
            Projected::Skolem(k) => write!(f, "?sk{k}"),
        }
    }
}

/// Projects candidate inference `n` into the target by substituting matched
/// base nodes with their correspondents.
pub fn project_inference(
    base: &RelGraph,
    target: &RelGraph,
    m: &CorrSet,
    n: NodeId,
) -> Result<Projected, SmtError> {
    let _ = target;
    if n.index() >= base.len() {
        return Err(SmtError::UnknownNode(n));
    }
    if !candidate_inferences(base, m).contains(&n) {
        return Err(SmtError::NotCandidateInference(n));
    }
    let image: HashMap<NodeId, NodeId> = m.iter().copied().collect();
    let mut skolems: BTreeMap<NodeId, usize> = BTreeMap::new();
    fn go(
        base: &RelGraph,
        v: NodeId,
        image: &HashMap<NodeId, NodeId>,
        skolems: &mut BTreeMap<NodeId, usize>,
    ) -> Projected {
        if let Some(&t) = image.get(&v) {
            return Projected::Target(t);
        }
        let node = base.node(v);
        if node.is_entity() {
            let next = skolems.len();
            return Projected::Skolem(*skolems.entry(v).or_insert(next));
        }
        Projected::Expr {
            label: node.label.clone(),
            args: node.args.iter().map(|&a| go(base, a, image, skolems)).collect(),
        }
    }
    Ok(go(base, n, &image, &mut skolems))
}
