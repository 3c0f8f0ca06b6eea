use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::IrError;

/// Dense node identifier; ids of a graph are always `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entity,
    Attribute,
    Function,
    Predicate,
}

impl NodeKind {
    pub fn is_entity(self) -> bool {
        self == NodeKind::Entity
    }
}

/// One expression (or entity) of a relational representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExprNode {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    /// Only meaningful for arity >= 2; nodes of smaller arity are stored as ordered.
    pub ordered: bool,
    pub args: Vec<NodeId>,
}

impl ExprNode {
    #[inline]
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    #[inline]
    pub fn is_entity(&self) -> bool {
        self.kind.is_entity()
    }

    /// Whether argument position matters for this node.
    #[inline]
    pub fn is_positional(&self) -> bool {
        self.ordered || self.args.len() < 2
    }
}

/// A semi-ordered DAG of expressions over entities.
///
/// Node ids are contiguous and every node's arguments are present. Unordered
/// nodes keep their arguments sorted by id, so `(R a b)` and `(R b a)` are the
/// same node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelGraph {
    nodes: Vec<ExprNode>,
    parents: Vec<Vec<NodeId>>,
    roots: Vec<NodeId>,
}

impl RelGraph {
    /// Validates a node table and builds the derived parent/root indexes.
    pub fn from_nodes(mut nodes: Vec<ExprNode>) -> Result<Self, IrError> {
        let n = nodes.len();
        for (i, node) in nodes.iter_mut().enumerate() {
            if node.id.index() != i {
                return Err(IrError::InvalidNode {
                    id: node.id,
                    reason: format!("ids must be contiguous, expected {i}"),
                });
            }
            check_kind_arity(node)?;
            if let Some(bad) = node.args.iter().find(|a| a.index() >= n) {
                return Err(IrError::UnknownNode(*bad));
            }
            canonicalize(node);
        }
        let mut parents = vec![Vec::new(); n];
        for node in &nodes {
            for &a in &node.args {
                if !parents[a.index()].contains(&node.id) {
                    parents[a.index()].push(node.id);
                }
            }
        }
        let roots = (0..n).filter(|&i| parents[i].is_empty()).map(NodeId).collect();
        let g = RelGraph { nodes, parents, roots };
        g.topo_layers()?;
        Ok(g)
    }

    pub fn empty() -> Self {
        RelGraph { nodes: Vec::new(), parents: Vec::new(), roots: Vec::new() }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &ExprNode {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&ExprNode> {
        self.nodes.get(id.index())
    }

    pub fn nodes(&self) -> &[ExprNode] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    #[inline]
    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.index()]
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn entity_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_entity()).count()
    }

    pub fn expression_count(&self) -> usize {
        self.len() - self.entity_count()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.args.len()).sum()
    }

    /// Longest-path stratification: layer `k` holds the nodes whose arguments
    /// all lie in layers below `k`, with at least one in layer `k - 1`.
    pub fn topo_layers(&self) -> Result<Vec<Vec<NodeId>>, IrError> {
        let n = self.len();
        let mut pending: Vec<usize> = self.nodes.iter().map(|v| distinct_args(v)).collect();
        let mut depth = vec![0usize; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &p in &self.parents[v] {
                let p = p.index();
                depth[p] = depth[p].max(depth[v] + 1);
                pending[p] -= 1;
                if pending[p] == 0 {
                    queue.push_back(p);
                }
            }
        }
        if seen != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
            return Err(IrError::Cycle(NodeId(stuck)));
        }
        let height = depth.iter().copied().max().map_or(0, |d| d + 1);
        let mut layers = vec![Vec::new(); height];
        for (i, &d) in depth.iter().enumerate() {
            layers[d].push(NodeId(i));
        }
        Ok(layers)
    }

    /// `v` together with all of its transitive arguments.
    pub fn rooted_subgraph(&self, v: NodeId) -> Result<BTreeSet<NodeId>, IrError> {
        if v.index() >= self.len() {
            return Err(IrError::UnknownNode(v));
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            if out.insert(x) {
                stack.extend(self.node(x).args.iter().copied());
            }
        }
        Ok(out)
    }

    /// Strict ancestors of `v` (nodes that transitively take `v` as an argument).
    pub fn ancestors(&self, v: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.parents(v).to_vec();
        while let Some(x) = stack.pop() {
            if out.insert(x) {
                stack.extend(self.parents(x).iter().copied());
            }
        }
        out
    }

    /// Size of the rooted subgraph of every node, counting shared nodes once.
    pub fn subgraph_sizes(&self) -> Vec<usize> {
        self.ids()
            .map(|v| self.rooted_subgraph(v).map(|s| s.len()).unwrap_or(0))
            .collect()
    }

    /// Renders the subexpression rooted at `v` in s-expression syntax.
    pub fn render(&self, v: NodeId) -> String {
        let node = self.node(v);
        if node.args.is_empty() && node.is_entity() {
            return node.label.clone();
        }
        let args: Vec<String> = node.args.iter().map(|&a| self.render(a)).collect();
        format!("({} {})", node.label, args.join(" "))
    }

    /// Finds the node denoted by an s-expression such as `(MASS sun)`.
    pub fn find(&self, expr: &str) -> Option<NodeId> {
        let parsed = super::parse::parse_fragment(expr).ok()?;
        self.match_fragment(&parsed)
    }

    fn match_fragment(&self, frag: &super::parse::Fragment) -> Option<NodeId> {
        use super::parse::Fragment;
        match frag {
            Fragment::Atom(s) => self
                .ids()
                .find(|&v| self.node(v).is_entity() && self.node(v).label == *s),
            Fragment::List(head, args) => {
                let mut ids = Vec::with_capacity(args.len());
                for a in args {
                    ids.push(self.match_fragment(a)?);
                }
                self.ids().find(|&v| {
                    let n = self.node(v);
                    if n.label != *head || n.args.len() != ids.len() {
                        return false;
                    }
                    if n.is_positional() {
                        n.args == ids
                    } else {
                        let mut sorted = ids.clone();
                        sorted.sort();
                        n.args == sorted
                    }
                })
            }
        }
    }

    /// Applies `rename` to every label, keeping structure and ids.
    pub fn relabel(&self, mut rename: impl FnMut(&ExprNode) -> String) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| ExprNode { label: rename(n), ..n.clone() })
            .collect();
        RelGraph { nodes, parents: self.parents.clone(), roots: self.roots.clone() }
    }
}

fn distinct_args(v: &ExprNode) -> usize {
    let mut a = v.args.clone();
    a.sort();
    a.dedup();
    a.len()
}

fn check_kind_arity(node: &ExprNode) -> Result<(), IrError> {
    let bad = |reason: &str| {
        Err(IrError::InvalidNode { id: node.id, reason: reason.to_string() })
    };
    match node.kind {
        NodeKind::Entity if !node.args.is_empty() => bad("entities take no arguments"),
        NodeKind::Attribute if node.args.len() != 1 => bad("attributes take exactly one argument"),
        NodeKind::Function | NodeKind::Predicate if node.args.is_empty() => {
            bad("functions and predicates take at least one argument")
        }
        _ => Ok(()),
    }
}

fn canonicalize(node: &mut ExprNode) {
    if node.args.len() < 2 {
        node.ordered = true;
    } else if !node.ordered {
        node.args.sort();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct NodeKey {
    label: String,
    args: Vec<NodeId>,
}

/// Incremental, hash-consing graph constructor.
///
/// Structurally identical nodes (same label, same canonical arguments) are
/// created once; [`GraphBuilder::add`] returns the existing id for repeats.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<ExprNode>,
    index: HashMap<NodeKey, NodeId>,
    signatures: HashMap<String, (NodeKind, usize, bool)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entity(&mut self, label: &str) -> Result<NodeId, IrError> {
        self.add(label, NodeKind::Entity, true, Vec::new()).map(|(id, _)| id)
    }

    /// Adds a node, returning its id and whether it was newly created.
    pub fn add(
        &mut self,
        label: &str,
        kind: NodeKind,
        ordered: bool,
        args: Vec<NodeId>,
    ) -> Result<(NodeId, bool), IrError> {
        let id = NodeId(self.nodes.len());
        let mut node = ExprNode { id, label: label.to_string(), kind, ordered, args };
        check_kind_arity(&node)?;
        if let Some(bad) = node.args.iter().find(|a| a.index() >= self.nodes.len()) {
            return Err(IrError::UnknownNode(*bad));
        }
        canonicalize(&mut node);
        let sig = (node.kind, node.arity(), node.ordered);
        match self.signatures.get(label) {
            Some(&(k, a, o)) if (k, a, o) != sig => {
                return Err(IrError::ArityMismatch {
                    symbol: label.to_string(),
                    expected: format!("{k:?}/{a}/{}", if o { "ordered" } else { "unordered" }),
                    found: format!(
                        "{:?}/{}/{}",
                        sig.0,
                        sig.1,
                        if sig.2 { "ordered" } else { "unordered" }
                    ),
                });
            }
            Some(_) => {}
            None => {
                self.signatures.insert(label.to_string(), sig);
            }
        }
        let key = NodeKey { label: node.label.clone(), args: node.args.clone() };
        if let Some(&existing) = self.index.get(&key) {
            return Ok((existing, false));
        }
        self.index.insert(key, id);
        self.nodes.push(node);
        Ok((id, true))
    }

    /// Whether a node with this label and argument list already exists.
    pub fn contains(&self, label: &str, ordered: bool, args: &[NodeId]) -> bool {
        let mut args = args.to_vec();
        if !ordered && args.len() >= 2 {
            args.sort();
        }
        self.index.contains_key(&NodeKey { label: label.to_string(), args })
    }

    pub fn build(self) -> Result<RelGraph, IrError> {
        RelGraph::from_nodes(self.nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> RelGraph {
        let mut b = GraphBuilder::new();
        let c = b.entity("c").unwrap();
        let (bb, _) = b.add("q", NodeKind::Function, true, vec![c]).unwrap();
        let (_a, _) = b.add("p", NodeKind::Predicate, true, vec![bb]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn chain_layers_are_singletons() {
        let layers = chain().topo_layers().unwrap();
        assert_eq!(layers, vec![vec![NodeId(0)], vec![NodeId(1)], vec![NodeId(2)]]);
    }

    #[test]
    fn single_entity_is_one_layer() {
        let mut b = GraphBuilder::new();
        b.entity("sun").unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.topo_layers().unwrap(), vec![vec![NodeId(0)]]);
        assert_eq!(g.rooted_subgraph(NodeId(0)).unwrap().len(), 1);
    }

    #[test]
    fn unordered_args_are_canonical() {
        let mut b = GraphBuilder::new();
        let x = b.entity("x").unwrap();
        let y = b.entity("y").unwrap();
        let (r1, new1) = b.add("R", NodeKind::Predicate, false, vec![y, x]).unwrap();
        let (r2, new2) = b.add("R", NodeKind::Predicate, false, vec![x, y]).unwrap();
        assert!(new1 && !new2);
        assert_eq!(r1, r2);
        let g = b.build().unwrap();
        assert_eq!(g.node(r1).args, vec![x, y]);
    }

    #[test]
    fn cycle_is_rejected() {
        let nodes = vec![
            ExprNode {
                id: NodeId(0),
                label: "p".into(),
                kind: NodeKind::Predicate,
                ordered: true,
                args: vec![NodeId(1)],
            },
            ExprNode {
                id: NodeId(1),
                label: "q".into(),
                kind: NodeKind::Predicate,
                ordered: true,
                args: vec![NodeId(0)],
            },
        ];
        assert!(matches!(RelGraph::from_nodes(nodes), Err(IrError::Cycle(_))));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let mut b = GraphBuilder::new();
        let x = b.entity("x").unwrap();
        let y = b.entity("y").unwrap();
        b.add("R", NodeKind::Predicate, true, vec![x]).unwrap();
        let err = b.add("R", NodeKind::Predicate, true, vec![x, y]).unwrap_err();
        assert!(matches!(err, IrError::ArityMismatch { .. }));
    }

    #[test]
    fn unknown_id_errors() {
        assert!(matches!(chain().rooted_subgraph(NodeId(9)), Err(IrError::UnknownNode(_))));
    }
}
