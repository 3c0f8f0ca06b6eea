//! Label graphs and signature graphs.
//!
//! The label graph replaces every entity by one shared token and every
//! relation symbol by a randomly drawn generic label of the same arity and
//! orderedness, consistently across base and target. The signature graph
//! gives each entity a unique identifier and each expression a token that
//! depends only on its kind, arity and orderedness.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ir::{ExprNode, NodeKind, RelGraph};

pub const ENTITY_TOKEN: &str = "ENT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// Generic labels per (arity, orderedness) class.
    pub label_pool: usize,
    pub entity_ids: usize,
    pub max_arity: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig { label_pool: 32, entity_ids: 64, max_arity: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("label pool {class} exhausted: need {needed}, have {available}")]
    LabelCapacity { class: String, needed: usize, available: usize },
    #[error("entity identifier pool exhausted: need {needed}, have {available}")]
    IdentifierCapacity { needed: usize, available: usize },
    #[error("arity {arity} exceeds the configured maximum {max}")]
    ArityTooLarge { arity: usize, max: usize },
}

/// (arity, ordered) class of a relation symbol. Unary symbols are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelClass {
    pub arity: usize,
    pub ordered: bool,
}

impl LabelClass {
    fn of(n: &ExprNode) -> Self {
        LabelClass { arity: n.arity(), ordered: n.is_positional() }
    }

    fn tag(self) -> String {
        format!("{}{}", self.arity, if self.ordered { 'o' } else { 'u' })
    }

    pub fn all(max_arity: usize) -> Vec<LabelClass> {
        let mut out = vec![LabelClass { arity: 1, ordered: true }];
        for arity in 2..=max_arity {
            out.push(LabelClass { arity, ordered: true });
            out.push(LabelClass { arity, ordered: false });
        }
        out
    }
}

pub fn generic_label(class: LabelClass, slot: usize) -> String {
    format!("G{}_{slot}", class.tag())
}

pub fn entity_identifier(slot: usize) -> String {
    format!("ID{slot}")
}

/// Signature token for an expression; attributes fold into predicates.
pub fn signature_token(kind: NodeKind, class: LabelClass) -> String {
    let k = if kind == NodeKind::Function { 'F' } else { 'P' };
    format!("S{k}{}", class.tag())
}

/// Symbol-to-generic-label map shared by base and target.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub symbols: BTreeMap<String, String>,
}

/// Entity-to-identifier maps for base and target (by node id).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureAssignment {
    pub base: BTreeMap<usize, String>,
    pub target: BTreeMap<usize, String>,
}

fn symbol_key(n: &ExprNode) -> String {
    let c = LabelClass::of(n);
    format!("{}/{}", n.label, c.tag())
}

fn check_arity(g: &RelGraph, max: usize) -> Result<(), EncodingError> {
    match g.nodes().iter().map(|n| n.arity()).max() {
        Some(arity) if arity > max => Err(EncodingError::ArityTooLarge { arity, max }),
        _ => Ok(()),
    }
}

/// Relabels both graphs with randomly drawn generic labels.
///
/// Symbols are visited in order of first appearance (base, then target) and
/// each takes the next label of a per-class shuffled pool.
pub fn make_label_graphs(
    base: &RelGraph,
    target: &RelGraph,
    cfg: &EncodingConfig,
    rng: &mut impl Rng,
) -> Result<(RelGraph, RelGraph, LabelAssignment), EncodingError> {
    check_arity(base, cfg.max_arity)?;
    check_arity(target, cfg.max_arity)?;
    let mut pools: HashMap<LabelClass, Vec<usize>> = HashMap::new();
    let mut assign = LabelAssignment::default();
    for n in base.nodes().iter().chain(target.nodes()) {
        if n.is_entity() {
            continue;
        }
        let key = symbol_key(n);
        if assign.symbols.contains_key(&key) {
            continue;
        }
        let class = LabelClass::of(n);
        let pool = pools.entry(class).or_insert_with(|| {
            let mut p: Vec<usize> = (0..cfg.label_pool).collect();
            p.shuffle(rng);
            p
        });
        let slot = pool.pop().ok_or_else(|| EncodingError::LabelCapacity {
            class: class.tag(),
            needed: cfg.label_pool + 1,
            available: cfg.label_pool,
        })?;
        assign.symbols.insert(key, generic_label(class, slot));
    }
    let rename = |n: &ExprNode| {
        if n.is_entity() {
            ENTITY_TOKEN.to_string()
        } else {
            assign.symbols[&symbol_key(n)].clone()
        }
    };
    let lb = base.relabel(rename);
    let lt = target.relabel(rename);
    Ok((lb, lt, assign))
}

fn signature_graphs(
    base: &RelGraph,
    target: &RelGraph,
    cfg: &EncodingConfig,
    slots: &[usize],
) -> Result<(RelGraph, RelGraph, SignatureAssignment), EncodingError> {
    check_arity(base, cfg.max_arity)?;
    check_arity(target, cfg.max_arity)?;
    let needed = base.entity_count() + target.entity_count();
    if needed > cfg.entity_ids {
        return Err(EncodingError::IdentifierCapacity { needed, available: cfg.entity_ids });
    }
    let mut next = slots.iter().copied();
    let mut assign = SignatureAssignment::default();
    for (g, side) in [(base, &mut assign.base), (target, &mut assign.target)] {
        for n in g.nodes().iter().filter(|n| n.is_entity()) {
            side.insert(n.id.index(), entity_identifier(next.next().expect("capacity checked")));
        }
    }
    let relabel = |g: &RelGraph, side: &BTreeMap<usize, String>| {
        g.relabel(|n| {
            if n.is_entity() {
                side[&n.id.index()].clone()
            } else {
                signature_token(n.kind, LabelClass::of(n))
            }
        })
    };
    let sb = relabel(base, &assign.base);
    let st = relabel(target, &assign.target);
    Ok((sb, st, assign))
}

/// Signature graphs with identifiers handed out in node order.
pub fn make_signature_graphs(
    base: &RelGraph,
    target: &RelGraph,
    cfg: &EncodingConfig,
) -> Result<(RelGraph, RelGraph, SignatureAssignment), EncodingError> {
    let slots: Vec<usize> = (0..cfg.entity_ids).collect();
    signature_graphs(base, target, cfg, &slots)
}

/// Signature graphs with identifiers drawn at random from the pool.
pub fn make_signature_graphs_random(
    base: &RelGraph,
    target: &RelGraph,
    cfg: &EncodingConfig,
    rng: &mut impl Rng,
) -> Result<(RelGraph, RelGraph, SignatureAssignment), EncodingError> {
    let mut slots: Vec<usize> = (0..cfg.entity_ids).collect();
    slots.shuffle(rng);
    signature_graphs(base, target, cfg, &slots)
}

/// Label and signature graphs of one base/target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub label_base: RelGraph,
    pub label_target: RelGraph,
    pub sig_base: RelGraph,
    pub sig_target: RelGraph,
    pub labels: LabelAssignment,
    pub signatures: SignatureAssignment,
}

pub fn encode_pair(
    base: &RelGraph,
    target: &RelGraph,
    cfg: &EncodingConfig,
    rng: &mut impl Rng,
) -> Result<EncodedPair, EncodingError> {
    let (label_base, label_target, labels) = make_label_graphs(base, target, cfg, rng)?;
    let (sig_base, sig_target, signatures) = make_signature_graphs_random(base, target, cfg, rng)?;
    Ok(EncodedPair { label_base, label_target, sig_base, sig_target, labels, signatures })
}

/// Dense token index for embedding lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }

    /// Entity token plus every generic label.
    pub fn labels(cfg: &EncodingConfig) -> Self {
        let mut t = vec![ENTITY_TOKEN.to_string()];
        for c in LabelClass::all(cfg.max_arity) {
            t.extend((0..cfg.label_pool).map(|s| generic_label(c, s)));
        }
        Self::from_tokens(t)
    }

    /// Entity identifiers plus every signature token.
    pub fn signatures(cfg: &EncodingConfig) -> Self {
        let mut t: Vec<String> = (0..cfg.entity_ids).map(entity_identifier).collect();
        for c in LabelClass::all(cfg.max_arity) {
            t.push(signature_token(NodeKind::Predicate, c));
            t.push(signature_token(NodeKind::Function, c));
        }
        Self::from_tokens(t)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    /// Token index of every node label, or the first unknown label.
    pub fn lookup(&self, g: &RelGraph) -> Result<Vec<usize>, String> {
        g.nodes().iter().map(|n| self.get(&n.label).ok_or_else(|| n.label.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_sexpr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_entity_becomes_token() {
        let g = parse_sexpr("a").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (l, _, _) = make_label_graphs(&g, &g, &EncodingConfig::default(), &mut rng).unwrap();
        assert_eq!(l.node(crate::NodeId(0)).label, ENTITY_TOKEN);
        let (s, _, a) = make_signature_graphs(&g, &RelGraph::empty(), &EncodingConfig::default()).unwrap();
        assert_eq!(a.base.len(), 1);
        assert_eq!(s.node(crate::NodeId(0)).label, "ID0");
    }

    #[test]
    fn distinct_unary_functions_get_distinct_labels() {
        let g = parse_sexpr(":function f :function g (f a) (g a)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (l, _, a) = make_label_graphs(&g, &g, &EncodingConfig::default(), &mut rng).unwrap();
        assert_eq!(a.symbols.len(), 2);
        assert_ne!(l.node(crate::NodeId(1)).label, l.node(crate::NodeId(2)).label);
        assert!(l.node(crate::NodeId(1)).label.starts_with("G1o_"));
    }

    #[test]
    fn pool_exhaustion_is_an_error() {
        let g = parse_sexpr("(P a) (Q a) (R a)").unwrap();
        let cfg = EncodingConfig { label_pool: 2, ..EncodingConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            make_label_graphs(&g, &g, &cfg, &mut rng),
            Err(EncodingError::LabelCapacity { .. })
        ));
        let cfg = EncodingConfig { entity_ids: 1, ..EncodingConfig::default() };
        assert!(matches!(
            make_signature_graphs(&g, &g, &cfg),
            Err(EncodingError::IdentifierCapacity { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn vocabularies_cover_generated_tokens() {
        let cfg = EncodingConfig::default();
        let g = parse_sexpr(":unordered U :function F (U a (F b) c) (R a b)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = encode_pair(&g, &g, &cfg, &mut rng).unwrap();
        assert!(Vocab::labels(&cfg).lookup(&e.label_base).is_ok());
        assert!(Vocab::signatures(&cfg).lookup(&e.sig_target).is_ok());
        assert_eq!(Vocab::labels(&cfg).len(), 1 + 5 * 32);
        assert_eq!(Vocab::signatures(&cfg).len(), 64 + 10);
    }
}
