//! Synthetic analogy generator.
//!
//! A set of shared random DAGs `C` is sampled first. The base and the target
//! each grow further layers on top of their own copy of `C`; the copies pair
//! up into the gold correspondences.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ir::{ExprNode, NodeId, NodeKind, RelGraph};
use crate::smt::{self, CorrSet};

pub const DATASET_SCHEMA: &str = "amn-synth";
pub const DATASET_VERSION: u32 = 1;

/// Inclusive integer range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Span { lo, hi }
    }

    fn sample(self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

/// Generator settings. The widths and counts are calibration constants: their
/// defaults reproduce mean graph sizes of about 27 expressions, 14 entities
/// and 27 correspondences per example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub min_layers: usize,
    pub max_layers: usize,
    pub max_arity: usize,
    /// Expression nodes per non-entity layer of a shared DAG.
    pub nodes_per_layer: Span,
    /// Entities at the bottom of each shared DAG (unused ones are dropped).
    pub entities_per_dag: Span,
    pub count_shared_dags: Span,
    /// Layers grown above the shared DAGs in each of base and target.
    pub extension_layers: Span,
    pub extension_nodes_per_layer: Span,
    /// Entities private to the base or the target.
    pub private_entities: Span,
    /// Distinct symbols per (kind, arity, orderedness) class.
    pub symbols_per_class: usize,
    pub function_prob: f64,
    pub unordered_prob: f64,
    /// Examples with more shared nodes than this are rejected and resampled.
    pub max_correspondences: Option<usize>,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_layers: 2,
            max_layers: 7,
            max_arity: 3,
            nodes_per_layer: Span::new(1, 2),
            entities_per_dag: Span::new(4, 8),
            count_shared_dags: Span::new(2, 4),
            extension_layers: Span::new(1, 3),
            extension_nodes_per_layer: Span::new(3, 8),
            private_entities: Span::new(3, 9),
            symbols_per_class: 6,
            function_prob: 0.5,
            unordered_prob: 0.5,
            max_correspondences: None,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("generator consistency failure: {0}")]
    Consistency(String),
    #[error("dataset schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

impl GenParams {
    /// Small instances: at most four layers and twelve correspondences.
    pub fn small() -> Self {
        GenParams {
            max_layers: 4,
            entities_per_dag: Span::new(2, 4),
            count_shared_dags: Span::new(1, 3),
            extension_layers: Span::new(1, 2),
            extension_nodes_per_layer: Span::new(1, 4),
            private_entities: Span::new(1, 3),
            max_correspondences: Some(12),
            ..GenParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Params(m.to_string()));
        if self.min_layers < 2 || self.min_layers > self.max_layers {
            return bad("need 2 <= min_layers <= max_layers");
        }
        if self.max_arity < 1 {
            return bad("max_arity must be at least 1");
        }
        for (name, s) in [
            ("nodes_per_layer", self.nodes_per_layer),
            ("entities_per_dag", self.entities_per_dag),
            ("count_shared_dags", self.count_shared_dags),
            ("extension_layers", self.extension_layers),
            ("extension_nodes_per_layer", self.extension_nodes_per_layer),
            ("private_entities", self.private_entities),
        ] {
            if s.lo > s.hi {
                return Err(SynthError::Params(format!("{name}: lo > hi")));
            }
        }
        if self.nodes_per_layer.lo == 0 || self.entities_per_dag.lo == 0 || self.count_shared_dags.lo == 0 {
            return bad("shared DAGs need at least one entity and one node per layer");
        }
        if self.symbols_per_class == 0 {
            return bad("symbols_per_class must be positive");
        }
        if !(0.0..=1.0).contains(&self.function_prob) || !(0.0..=1.0).contains(&self.unordered_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        Ok(())
    }

    /// RNG stream for example `index`, independent of generation order.
    pub fn example_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// A base/target pair with its gold mapping and gold candidate inferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub base: RelGraph,
    pub target: RelGraph,
    pub gold_m: CorrSet,
    pub gold_ci: BTreeSet<NodeId>,
}

impl TrainingExample {
    /// Checks that the gold mapping is error-free and the gold inferences
    /// agree with the candidate-inference fixed point.
    pub fn check(&self) -> Result<(), SynthError> {
        let rep = smt::violations(&self.base, &self.target, &self.gold_m);
        if !rep.is_error_free() {
            return Err(SynthError::Consistency(format!("gold mapping has violations: {rep:?}")));
        }
        let ci = smt::candidate_inferences(&self.base, &self.gold_m);
        if ci != self.gold_ci {
            return Err(SynthError::Consistency(format!(
                "gold inferences {:?} differ from fixed point {:?}",
                self.gold_ci, ci
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Proto {
    label: String,
    kind: NodeKind,
    ordered: bool,
    args: Vec<usize>,
}

fn proto_key(p: &Proto) -> (String, Vec<usize>) {
    let mut args = p.args.clone();
    if !p.ordered {
        args.sort_unstable();
    }
    (p.label.clone(), args)
}

/// Nodes in insertion (topological) order with a hash-consing index.
#[derive(Debug, Clone, Default)]
struct Arena {
    nodes: Vec<Proto>,
    keys: HashSet<(String, Vec<usize>)>,
}

impl Arena {
    fn push(&mut self, p: Proto) -> usize {
        self.keys.insert(proto_key(&p));
        self.nodes.push(p);
        self.nodes.len() - 1
    }

    fn contains(&self, p: &Proto) -> bool {
        self.keys.contains(&proto_key(p))
    }

    /// Drops entities without parents among nodes `from..`, keeping order.
    fn prune_orphan_entities(&mut self, from: usize) {
        let mut has_parent = vec![false; self.nodes.len()];
        for n in &self.nodes {
            for &a in &n.args {
                has_parent[a] = true;
            }
        }
        let keep: Vec<bool> = (0..self.nodes.len())
            .map(|i| i < from || self.nodes[i].kind != NodeKind::Entity || has_parent[i])
            .collect();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut out = Arena::default();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep[i] {
                let mut n = n.clone();
                n.args.iter_mut().for_each(|a| *a = remap[*a]);
                remap[i] = out.push(n);
            }
        }
        *self = out;
    }

    /// Emits a graph with ids in a random topological order; returns the
    /// arena-index to node-id map alongside.
    fn emit(&self, rng: &mut impl Rng) -> (RelGraph, Vec<NodeId>) {
        let n = self.nodes.len();
        let mut pending: Vec<usize> = self.nodes.iter().map(|p| p.args.len()).collect();
        let mut parents = vec![Vec::new(); n];
        for (i, p) in self.nodes.iter().enumerate() {
            for &a in &p.args {
                parents[a].push(i);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut ids = vec![NodeId(0); n];
        let mut next = 0;
        while !ready.is_empty() {
            let v = ready.swap_remove(rng.gen_range(0..ready.len()));
            ids[v] = NodeId(next);
            next += 1;
            for &p in &parents[v] {
                pending[p] -= 1;
                if pending[p] == 0 {
                    ready.push(p);
                }
            }
        }
        let mut nodes: Vec<ExprNode> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| ExprNode {
                id: ids[i],
                label: p.label.clone(),
                kind: p.kind,
                ordered: p.ordered,
                args: p.args.iter().map(|&a| ids[a]).collect(),
            })
            .collect();
        nodes.sort_by_key(|e| e.id);
        let g = RelGraph::from_nodes(nodes).expect("arena is a valid DAG");
        (g, ids)
    }
}

const MAX_RESAMPLE: usize = 8;

struct Sampler<'a, R: Rng> {
    params: &'a GenParams,
    rng: &'a mut R,
    entities: usize,
}

impl<R: Rng> Sampler<'_, R> {
    fn entity(&mut self) -> Proto {
        self.entities += 1;
        Proto { label: format!("E{}", self.entities - 1), kind: NodeKind::Entity, ordered: true, args: Vec::new() }
    }

    /// Symbols encode their class so the same name never changes signature.
    fn symbol(&mut self, kind: NodeKind, arity: usize, ordered: bool) -> String {
        let slot = self.rng.gen_range(0..self.params.symbols_per_class);
        let class = (arity - 1) * 2 + usize::from(!ordered);
        let n = class * self.params.symbols_per_class + slot;
        match kind {
            NodeKind::Function => format!("F{n}"),
            _ => format!("P{n}"),
        }
    }

    /// Samples an expression whose first argument comes from `prev` and the
    /// rest from `lower`; gives up after repeated hash-consing collisions.
    fn expression(&mut self, arena: &Arena, lower: &[usize], prev: &[usize]) -> Option<Proto> {
        if lower.is_empty() || prev.is_empty() {
            return None;
        }
        for _ in 0..MAX_RESAMPLE {
            let arity = self.rng.gen_range(1..=self.params.max_arity).min(lower.len());
            let first = *prev.choose(self.rng).expect("nonempty");
            let others: Vec<usize> = lower.iter().copied().filter(|&x| x != first).collect();
            let mut args = vec![first];
            args.extend(others.choose_multiple(self.rng, arity - 1).copied());
            args.shuffle(self.rng);
            let kind = if self.rng.gen_bool(self.params.function_prob) {
                NodeKind::Function
            } else {
                NodeKind::Predicate
            };
            let ordered = args.len() < 2 || !self.rng.gen_bool(self.params.unordered_prob);
            let label = self.symbol(kind, args.len(), ordered);
            let p = Proto { label, kind, ordered, args };
            if !arena.contains(&p) {
                return Some(p);
            }
        }
        None
    }

    /// Grows `layers` expression layers of the given width above `lower`.
    fn grow(&mut self, arena: &mut Arena, mut lower: Vec<usize>, mut prev: Vec<usize>, layers: usize, width: Span) {
        for _ in 0..layers {
            let w = width.sample(self.rng);
            let mut cur = Vec::with_capacity(w);
            for _ in 0..w {
                if let Some(p) = self.expression(arena, &lower, &prev) {
                    cur.push(arena.push(p));
                }
            }
            if cur.is_empty() {
                continue;
            }
            lower.extend(&cur);
            prev = cur;
        }
    }

    /// One layered DAG appended to `arena`.
    fn dag(&mut self, arena: &mut Arena) {
        let p = self.params;
        let k = self.rng.gen_range(p.min_layers..=p.max_layers);
        let e = p.entities_per_dag.sample(self.rng);
        let ents: Vec<usize> = (0..e).map(|_| {
            let ent = self.entity();
            arena.push(ent)
        }).collect();
        self.grow(arena, ents.clone(), ents, k - 1, p.nodes_per_layer);
    }

    /// Base or target: `shared` plus private entities and extension layers.
    fn extend(&mut self, shared: &Arena) -> Arena {
        let p = self.params;
        let mut arena = shared.clone();
        let mut lower: Vec<usize> = (0..arena.nodes.len()).collect();
        for _ in 0..p.private_entities.sample(self.rng) {
            let ent = self.entity();
            lower.push(arena.push(ent));
        }
        let layers = p.extension_layers.sample(self.rng);
        self.grow(&mut arena, lower.clone(), lower, layers, p.extension_nodes_per_layer);
        arena.prune_orphan_entities(shared.nodes.len());
        arena
    }
}

/// A single layered random DAG.
pub fn gen_dag(params: &GenParams, rng: &mut impl Rng) -> RelGraph {
    let mut s = Sampler { params, rng, entities: 0 };
    let mut arena = Arena::default();
    s.dag(&mut arena);
    arena.prune_orphan_entities(0);
    arena.emit(s.rng).0
}

/// Independent statement of the gold inference rule: unmatched ancestors of
/// shared nodes, plus every unmatched descendant of those ancestors.
fn gold_inferences(base: &RelGraph, shared: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let mut anc = BTreeSet::new();
    for &c in shared {
        anc.extend(base.ancestors(c));
    }
    let mut out = BTreeSet::new();
    for &a in anc.iter().filter(|a| !shared.contains(a)) {
        if let Ok(sub) = base.rooted_subgraph(a) {
            out.extend(sub.into_iter().filter(|v| !shared.contains(v)));
        }
    }
    out
}

fn try_example(params: &GenParams, rng: &mut impl Rng) -> Result<Option<TrainingExample>, SynthError> {
    let mut s = Sampler { params, rng, entities: 0 };
    let mut shared = Arena::default();
    for _ in 0..params.count_shared_dags.sample(s.rng) {
        s.dag(&mut shared);
    }
    shared.prune_orphan_entities(0);
    let c = shared.nodes.len();
    if c == 0 || params.max_correspondences.is_some_and(|m| c > m) {
        return Ok(None);
    }
    let b = s.extend(&shared);
    let t = s.extend(&shared);
    let (base, bid) = b.emit(s.rng);
    let (target, tid) = t.emit(s.rng);
    let gold_m: CorrSet = (0..c).map(|i| (bid[i], tid[i])).collect();
    let shared_base: BTreeSet<NodeId> = bid[..c].iter().copied().collect();
    let gold_ci = gold_inferences(&base, &shared_base);
    let ex = TrainingExample { base, target, gold_m, gold_ci };
    ex.check()?;
    Ok(Some(ex))
}

const MAX_ATTEMPTS: usize = 10_000;

/// Samples one example, resampling rejected draws.
pub fn gen_example(params: &GenParams, rng: &mut impl Rng) -> Result<TrainingExample, SynthError> {
    params.validate()?;
    for _ in 0..MAX_ATTEMPTS {
        if let Some(ex) = try_example(params, rng)? {
            return Ok(ex);
        }
    }
    Err(SynthError::Params(format!(
        "no example satisfied the constraints in {MAX_ATTEMPTS} attempts"
    )))
}

/// Examples `range` of the dataset defined by `params`, in index order.
pub fn gen_examples(params: &GenParams, range: std::ops::Range<u64>) -> Result<Vec<TrainingExample>, SynthError> {
    params.validate()?;
    range
        .into_par_iter()
        .map(|i| gen_example(params, &mut params.example_rng(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: String,
    pub version: u32,
    pub count: u64,
    pub params: GenParams,
}

const CHUNK: u64 = 256;

/// Writes a JSONL dataset: a header line, then one example per line.
pub fn write_dataset(path: &Path, n: u64, params: &GenParams) -> Result<(), SynthError> {
    params.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    let header = DatasetHeader {
        schema: DATASET_SCHEMA.to_string(),
        version: DATASET_VERSION,
        count: n,
        params: params.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|source| SynthError::Json { line: 1, source })?;
    w.write_all(b"\n")?;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        for (i, ex) in gen_examples(params, start..end)?.iter().enumerate() {
            let line = start as usize + i + 2;
            serde_json::to_writer(&mut w, ex).map_err(|source| SynthError::Json { line, source })?;
            w.write_all(b"\n")?;
        }
        start = end;
    }
    w.flush()?;
    Ok(())
}

/// Lazily reads a dataset written by [`write_dataset`].
pub struct DatasetReader {
    pub header: DatasetHeader,
    lines: std::io::Lines<BufReader<File>>,
    line: usize,
}

pub fn read_dataset(path: &Path) -> Result<DatasetReader, SynthError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| SynthError::Schema("empty file".into()))??;
    let header: DatasetHeader =
        serde_json::from_str(&first).map_err(|source| SynthError::Json { line: 1, source })?;
    if header.schema != DATASET_SCHEMA || header.version != DATASET_VERSION {
        return Err(SynthError::Schema(format!(
            "expected {DATASET_SCHEMA} v{DATASET_VERSION}, found {} v{}",
            header.schema, header.version
        )));
    }
    Ok(DatasetReader { header, lines, line: 1 })
}

impl Iterator for DatasetReader {
    type Item = Result<TrainingExample, SynthError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            return Some(serde_json::from_str(&text).map_err(|source| SynthError::Json { line, source }));
        }
    }
}

/// Mean sizes over a sample of examples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub base_expressions: f64,
    pub base_entities: f64,
    pub target_expressions: f64,
    pub target_entities: f64,
    pub correspondences: f64,
}

impl SizeStats {
    pub fn of<'a>(examples: impl IntoIterator<Item = &'a TrainingExample>) -> Self {
        let mut s = SizeStats::default();
        let mut n = 0.0;
        for ex in examples {
            n += 1.0;
            s.base_expressions += ex.base.expression_count() as f64;
            s.base_entities += ex.base.entity_count() as f64;
            s.target_expressions += ex.target.expression_count() as f64;
            s.target_entities += ex.target.entity_count() as f64;
            s.correspondences += ex.gold_m.len() as f64;
        }
        if n > 0.0 {
            s.base_expressions /= n;
            s.base_entities /= n;
            s.target_expressions /= n;
            s.target_entities /= n;
            s.correspondences /= n;
        }
        s
    }
}
