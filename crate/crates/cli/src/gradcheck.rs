//! Finite-difference checks of the tape primitives and every model stage.

use amn_core::ir::parse_sexpr;
use amn_core::smt;
use amn_core::synth::TrainingExample;
use amn_core::encoding::EncodingConfig;
use amn_core::{NodeId, RelGraph};
use amn_model::{Amn, GoldOrder, ModelConfig};
use amn_tensor::gradcheck::{GradCheck, GradCheckReport};
use amn_tensor::{Matrix, ParamId, ParamStore, Reduce, Tape, Var};
use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub report: GradCheckReport,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.report.checked > 0 && self.report.max_rel_error < TOLERANCE
    }
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect())
}

/// Weighted sum with fixed random weights, so every output element matters.
fn probe(t: &mut Tape, v: Var, seed: u64) -> Var {
    let (r, c) = t.shape(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w = t.constant(random(&mut rng, r, c, -1.0, 1.0));
    let p = t.mul(v, w);
    t.sum(p)
}

type Shape = (usize, usize, f64, f64);
type Primitive = (&'static str, Vec<Shape>, fn(&mut Tape, &[Var]) -> Var);

const U: Shape = (3, 4, -2.0, 2.0);
const ROW: Shape = (1, 4, -1.0, 1.0);

fn primitives() -> Vec<Primitive> {
    vec![
        ("matmul", vec![(3, 5, -1.0, 1.0), (5, 2, -1.0, 1.0)], |t, x| t.matmul(x[0], x[1])),
        ("transpose", vec![U], |t, x| t.transpose(x[0])),
        ("reshape", vec![U], |t, x| t.reshape(x[0], 6, 2)),
        ("add", vec![U, U], |t, x| t.add(x[0], x[1])),
        ("sub", vec![U, U], |t, x| t.sub(x[0], x[1])),
        ("mul", vec![U, U], |t, x| t.mul(x[0], x[1])),
        ("scale", vec![U], |t, x| t.scale(x[0], -0.7)),
        ("add_row", vec![U, ROW], |t, x| t.add_row(x[0], x[1])),
        ("mul_row", vec![U, ROW], |t, x| t.mul_row(x[0], x[1])),
        ("concat_cols", vec![U, (3, 2, -1.0, 1.0)], |t, x| t.concat_cols(&[x[0], x[1], x[0]])),
        ("concat_rows", vec![U, (2, 4, -1.0, 1.0)], |t, x| t.concat_rows(&[x[1], x[0]])),
        ("slice_cols", vec![U], |t, x| t.slice_cols(x[0], 1, 2)),
        ("slice_rows", vec![U], |t, x| t.slice_rows(x[0], 1, 2)),
        ("gather_rows", vec![U], |t, x| t.gather_rows(x[0], &[2, 0, 2, 1])),
        ("scatter_add_rows", vec![U], |t, x| t.scatter_add_rows(x[0], &[1, 1, 0], 3)),
        ("sigmoid", vec![U], |t, x| t.sigmoid(x[0])),
        ("tanh", vec![U], |t, x| t.tanh(x[0])),
        ("elu", vec![U], |t, x| t.elu(x[0])),
        ("ln", vec![(3, 4, 0.2, 3.0)], |t, x| t.ln(x[0])),
        ("softmax_rows", vec![U], |t, x| t.softmax_rows(x[0])),
        ("log_softmax_rows", vec![U], |t, x| t.log_softmax_rows(x[0])),
        ("layer_norm_rows", vec![U], |t, x| t.layer_norm_rows(x[0])),
        ("l2_normalize_rows", vec![U], |t, x| t.l2_normalize_rows(x[0])),
        ("row_dot", vec![U, U], |t, x| t.row_dot(x[0], x[1])),
        ("pick", vec![U], |t, x| t.pick(x[0], &[(0, 1), (2, 3), (0, 1)])),
        ("sum", vec![U], |t, x| t.sum(x[0])),
        ("mean", vec![U], |t, x| t.mean(x[0])),
        ("reduce_max", vec![U], |t, x| t.reduce_cols(x[0], Reduce::Max)),
        ("reduce_min", vec![U], |t, x| t.reduce_cols(x[0], Reduce::Min)),
        ("reduce_mean", vec![U], |t, x| t.reduce_cols(x[0], Reduce::Mean)),
        ("cross_entropy", vec![U], |t, x| t.cross_entropy(x[0], &[3, 0, 1])),
    ]
}

/// Checks every tape primitive on random inputs.
pub fn check_primitives(check: &GradCheck) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (seed, (name, shapes, f)) in primitives().into_iter().enumerate() {
        let seed = seed as u64 + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        for (k, &(r, c, lo, hi)) in shapes.iter().enumerate() {
            store.add(&format!("x{k}"), random(&mut rng, r, c, lo, hi));
        }
        let n = shapes.len();
        let report = check.run(&mut store, |t| {
            let xs: Vec<Var> = (0..n).map(|k| t.param(ParamId(k))).collect();
            let y = f(t, &xs);
            probe(t, y, seed)
        })?;
        out.push(CheckResult { name: format!("primitive {name}"), report });
    }
    Ok(out)
}

/// A model small enough to check every parameter element.
pub fn small_model_config() -> ModelConfig {
    ModelConfig {
        node_dim: 4,
        heads: 2,
        attn_dim: 8,
        value_hidden: 6,
        encoding: EncodingConfig { label_pool: 4, entity_ids: 8, max_arity: 3 },
        ..ModelConfig::default()
    }
}

/// `(P a b)` against `(P x y)`.
pub fn three_node_example() -> TrainingExample {
    let base = parse_sexpr("a\nb\n(P a b)").expect("valid");
    let target = parse_sexpr("x\ny\n(P x y)").expect("valid");
    let gold_m = (0..3).map(|i| (NodeId(i), NodeId(i))).collect();
    let gold_ci = smt::candidate_inferences(&base, &gold_m);
    TrainingExample { base, target, gold_m, gold_ci }
}

pub const SOLAR: &str = include_str!("../../../data/solar.sexp");
pub const ATOM: &str = include_str!("../../../data/atom.sexp");

fn solar_atom() -> (RelGraph, RelGraph) {
    (parse_sexpr(SOLAR).expect("valid"), parse_sexpr(ATOM).expect("valid"))
}

/// Gradient checks of the DAG LSTM, encoder, decoder scoring path and full
/// loss of a model built from `config`.
pub fn check_model(check: &GradCheck, config: ModelConfig, seed: u64) -> Result<Vec<CheckResult>> {
    let mut model = Amn::new(config, seed)?;
    let mut store = std::mem::take(&mut model.store);
    let mut out = Vec::new();
    let (b, t) = solar_atom();
    let enc = model.encode_pair(&b, &t, &mut ChaCha8Rng::seed_from_u64(seed))?;

    let report = check.run(&mut store, |tp| {
        let emb = model.embed(tp, &enc).expect("encodable");
        let both = tp.concat_cols(&[emb.lb, emb.sb]);
        probe(tp, both, 1)
    })?;
    out.push(CheckResult { name: "dag lstm".into(), report });

    let report = check.run(&mut store, |tp| {
        let emb = model.embed(tp, &enc).expect("encodable");
        let cands = model.candidate_set(tp, &emb);
        let e = model.encode(tp, &emb, &cands);
        probe(tp, e, 2)
    })?;
    out.push(CheckResult { name: "encoder".into(), report });

    let report = check.run(&mut store, |tp| {
        let emb = model.embed(tp, &enc).expect("encodable");
        let cands = model.candidate_set(tp, &emb);
        let e = model.encode(tp, &emb, &cands);
        let ctx = model.decode_context(tp, &emb, &cands, e);
        let picks: Vec<usize> = (0..cands.len()).step_by(3).collect();
        let v = model.decoder_values(tp, &ctx, &picks);
        probe(tp, v, 3)
    })?;
    out.push(CheckResult { name: "decoder score path".into(), report });

    let ex = three_node_example();
    let enc = model.encode_pair(&ex.base, &ex.target, &mut ChaCha8Rng::seed_from_u64(seed + 1))?;
    let report = check.run(&mut store, |tp| {
        let parts = model.loss(tp, &ex, &enc, false, GoldOrder::Ascending).expect("loss");
        let ci = tp.scale(parts.ci, 0.1);
        tp.add(parts.corr, ci)
    })?;
    out.push(CheckResult { name: "end-to-end loss (3-node instance)".into(), report });
    Ok(out)
}

/// Primitives plus every model stage on the small model.
pub fn full_suite() -> Result<Vec<CheckResult>> {
    let check = GradCheck::default();
    let mut out = check_primitives(&check)?;
    out.extend(check_model(&check, small_model_config(), 11)?);
    Ok(out)
}
