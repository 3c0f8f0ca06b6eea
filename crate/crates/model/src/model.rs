use std::collections::BTreeSet;
use std::path::Path;

use amn_core::encoding::{encode_pair, EncodedPair, Vocab};
use amn_core::smt::{self, CorrSet};
use amn_core::synth::TrainingExample;
use amn_core::{Mapping, NodeId, RelGraph};
use amn_tensor::{checkpoint, Matrix, ParamId, ParamStore, Reduce, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Ablation, GoldOrder, ModelConfig};
use crate::dag_lstm::DagLstm;
use crate::layers::{Ffn, LayerNorm, Linear, Mha};
use crate::ModelError;

const CHECKPOINT_KIND: &str = "amn-model";

#[derive(Debug, Clone)]
pub struct EncoderLayer {
    pub attn: Mha,
    pub ln1: LayerNorm,
    pub ffn: Ffn,
    pub ln2: LayerNorm,
}

#[derive(Debug, Clone)]
pub struct DecoderLayer {
    pub self_attn: Mha,
    pub ln1: LayerNorm,
    pub cross_attn: Mha,
    pub ln2: LayerNorm,
    pub ffn: Ffn,
    pub ln3: LayerNorm,
}

/// Learned tuple standing in for a correspondence: vector plus base and
/// target pseudo-signatures.
#[derive(Debug, Clone)]
pub struct Token {
    pub h: ParamId,
    pub sb: ParamId,
    pub st: ParamId,
}

#[derive(Debug, Clone)]
pub struct AmnParams {
    pub label_lstm: DagLstm,
    pub sig_lstm: DagLstm,
    pub encoder: Vec<EncoderLayer>,
    pub decoder: Vec<DecoderLayer>,
    pub score_q: Linear,
    pub score_k: Linear,
    pub start: Token,
    pub end: Token,
    /// Combines attention and signature similarities into π.
    pub pi: Ffn,
    pub value: Ffn,
    pub ci_q: Linear,
    pub ci_k: Linear,
    pub ci_end: ParamId,
    pub ci_value: Ffn,
}

/// Node embeddings of one encoded pair. Signatures are already normalized
/// (unless ablated).
#[derive(Debug, Clone, Copy)]
pub struct Embedded {
    pub lb: Var,
    pub lt: Var,
    pub sb: Var,
    pub st: Var,
}

/// Per-example state shared by all decoding steps.
#[derive(Debug, Clone)]
pub struct DecodeContext {
    /// Number of candidate correspondences; option `n` is END-TOK.
    pub n: usize,
    pub encoded: Var,
    opt_sb: Var,
    opt_st: Var,
    keys: Var,
    cross: Vec<(Var, Var)>,
    start_h: Var,
    start_sb: Var,
    start_st: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct LossParts {
    pub corr: Var,
    pub ci: Var,
    /// Gold correspondences of the example.
    pub gold: usize,
    /// Gold correspondences absent from the candidate set.
    pub skipped: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mapping: Mapping,
    pub candidates: Vec<(NodeId, NodeId)>,
    /// Decoder steps taken, including the one that chose END-TOK.
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Amn {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub params: AmnParams,
    label_vocab: Vocab,
    sig_vocab: Vocab,
}

fn token(store: &mut ParamStore, name: &str, dim: usize, sig: usize, rng: &mut impl Rng) -> Token {
    Token {
        h: store.add_uniform(&format!("{name}.h"), 1, dim, 1.0 / (dim as f64).sqrt(), rng),
        sb: store.add_uniform(&format!("{name}.sb"), 1, sig, 1.0 / (sig as f64).sqrt(), rng),
        st: store.add_uniform(&format!("{name}.st"), 1, sig, 1.0 / (sig as f64).sqrt(), rng),
    }
}

/// Index of the largest value; ties go to the first.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl Amn {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate().map_err(ModelError::Config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let label_vocab = Vocab::labels(&config.encoding);
        let sig_vocab = Vocab::signatures(&config.encoding);
        let (d, m, a, hd) = (config.node_dim, config.model_dim(), config.attn_dim, config.value_hidden);
        let s = &mut ParamStore::new();
        let label_lstm = DagLstm::new(s, "label_lstm", label_vocab.len(), d, config.edge_types(), rng);
        let sig_lstm = DagLstm::new(s, "sig_lstm", sig_vocab.len(), d, config.edge_types(), rng);
        let ffn_sizes = [m, config.ffn_mult * m, m];
        let encoder = (0..config.layers)
            .map(|i| {
                let p = format!("encoder.{i}");
                EncoderLayer {
                    attn: Mha::new(s, &format!("{p}.attn"), m, a, config.heads, rng),
                    ln1: LayerNorm::new(s, &format!("{p}.ln1"), m),
                    ffn: Ffn::new(s, &format!("{p}.ffn"), &ffn_sizes, rng),
                    ln2: LayerNorm::new(s, &format!("{p}.ln2"), m),
                }
            })
            .collect();
        let decoder = (0..config.layers)
            .map(|i| {
                let p = format!("decoder.{i}");
                DecoderLayer {
                    self_attn: Mha::new(s, &format!("{p}.self_attn"), m, a, config.heads, rng),
                    ln1: LayerNorm::new(s, &format!("{p}.ln1"), m),
                    cross_attn: Mha::new(s, &format!("{p}.cross_attn"), m, a, config.heads, rng),
                    ln2: LayerNorm::new(s, &format!("{p}.ln2"), m),
                    ffn: Ffn::new(s, &format!("{p}.ffn"), &ffn_sizes, rng),
                    ln3: LayerNorm::new(s, &format!("{p}.ln3"), m),
                }
            })
            .collect();
        let params = AmnParams {
            label_lstm,
            sig_lstm,
            encoder,
            decoder,
            score_q: Linear::new(s, "score.q", m, m, false, rng),
            score_k: Linear::new(s, "score.k", m, m, false, rng),
            start: token(s, "start", m, d, rng),
            end: token(s, "end", m, d, rng),
            pi: Ffn::new(s, "pi", &[3, hd, hd, 1], rng),
            value: Ffn::new(s, "value", &[3, hd, hd, 1], rng),
            ci_q: Linear::new(s, "ci.q", d, d, false, rng),
            ci_k: Linear::new(s, "ci.k", d, d, false, rng),
            ci_end: s.add_uniform("ci.end", 1, d, 1.0 / (d as f64).sqrt(), rng),
            ci_value: Ffn::new(s, "ci.value", &[3, hd, hd, 1], rng),
        };
        Ok(Amn { config, store: std::mem::take(s), params, label_vocab, sig_vocab })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let meta = serde_json::json!({ "kind": CHECKPOINT_KIND, "config": self.config });
        checkpoint::save(&self.store, &meta, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let (store, manifest) = checkpoint::load(path)?;
        if manifest.meta.get("kind").and_then(|k| k.as_str()) != Some(CHECKPOINT_KIND) {
            return Err(ModelError::Config(format!("{} is not a model checkpoint", path.display())));
        }
        let config: ModelConfig = serde_json::from_value(manifest.meta["config"].clone())
            .map_err(|e| ModelError::Config(format!("checkpoint config: {e}")))?;
        let mut model = Amn::new(config, 0)?;
        checkpoint::restore_into(&mut model.store, &store)?;
        Ok(model)
    }

    pub fn encode_pair(&self, base: &RelGraph, target: &RelGraph, rng: &mut impl Rng) -> Result<EncodedPair, ModelError> {
        Ok(encode_pair(base, target, &self.config.encoding, rng)?)
    }

    fn normalize(&self, t: &mut Tape, s: Var) -> Var {
        if self.config.ablation == Ablation::NoSigNorm {
            s
        } else {
            t.l2_normalize_rows(s)
        }
    }

    fn lookup(vocab: &Vocab, g: &RelGraph) -> Result<Vec<usize>, ModelError> {
        vocab.lookup(g).map_err(ModelError::UnknownLabel)
    }

    /// Runs both DAG LSTMs over the label and signature graphs.
    pub fn embed(&self, t: &mut Tape, enc: &EncodedPair) -> Result<Embedded, ModelError> {
        let p = &self.params;
        let lb = p.label_lstm.embed(t, &enc.label_base, &Self::lookup(&self.label_vocab, &enc.label_base)?)?;
        let lt = p.label_lstm.embed(t, &enc.label_target, &Self::lookup(&self.label_vocab, &enc.label_target)?)?;
        let (sb, st) = if self.config.ablation == Ablation::NoSigGraph {
            (lb, lt)
        } else {
            let sb = p.sig_lstm.embed(t, &enc.sig_base, &Self::lookup(&self.sig_vocab, &enc.sig_base)?)?;
            let st = p.sig_lstm.embed(t, &enc.sig_target, &Self::lookup(&self.sig_vocab, &enc.sig_target)?)?;
            (sb, st)
        };
        let sb = self.normalize(t, sb);
        let st = self.normalize(t, st);
        Ok(Embedded { lb, lt, sb, st })
    }

    /// Node pairs whose label embeddings lie within epsilon, ordered by
    /// (base id, target id).
    pub fn candidate_set(&self, t: &Tape, emb: &Embedded) -> Vec<(NodeId, NodeId)> {
        let (lb, lt) = (t.value(emb.lb), t.value(emb.lt));
        let eps2 = self.config.epsilon * self.config.epsilon;
        let mut out = Vec::new();
        for b in 0..lb.rows {
            for c in 0..lt.rows {
                let d2: f64 = lb.row(b).iter().zip(lt.row(c)).map(|(x, y)| (x - y) * (x - y)).sum();
                if d2 <= eps2 {
                    out.push((NodeId(b), NodeId(c)));
                }
            }
        }
        out
    }

    /// Transformer encoder over the candidate correspondence vectors.
    pub fn encode(&self, t: &mut Tape, emb: &Embedded, cands: &[(NodeId, NodeId)]) -> Var {
        assert!(!cands.is_empty(), "encode needs at least one candidate");
        let bs: Vec<usize> = cands.iter().map(|c| c.0.index()).collect();
        let ts: Vec<usize> = cands.iter().map(|c| c.1.index()).collect();
        let parts = [
            t.gather_rows(emb.lb, &bs),
            t.gather_rows(emb.lt, &ts),
            t.gather_rows(emb.sb, &bs),
            t.gather_rows(emb.st, &ts),
        ];
        let mut x = t.concat_cols(&parts);
        for l in &self.params.encoder {
            let a = l.attn.apply(t, x, x);
            let r = t.add(x, a);
            x = l.ln1.apply(t, r);
            let f = l.ffn.apply(t, x);
            let r = t.add(x, f);
            x = l.ln2.apply(t, r);
        }
        x
    }

    pub fn decode_context(&self, t: &mut Tape, emb: &Embedded, cands: &[(NodeId, NodeId)], encoded: Var) -> DecodeContext {
        let p = &self.params;
        let bs: Vec<usize> = cands.iter().map(|c| c.0.index()).collect();
        let ts: Vec<usize> = cands.iter().map(|c| c.1.index()).collect();
        let end_h = t.param(p.end.h);
        let opts = t.concat_rows(&[encoded, end_h]);
        let keys = p.score_k.apply(t, opts);
        let sig = |t: &mut Tape, all: Var, idx: &[usize], end: ParamId| {
            let rows = t.gather_rows(all, idx);
            let e = t.param(end);
            let e = self.normalize(t, e);
            t.concat_rows(&[rows, e])
        };
        let opt_sb = sig(t, emb.sb, &bs, p.end.sb);
        let opt_st = sig(t, emb.st, &ts, p.end.st);
        let cross = p.decoder.iter().map(|l| l.cross_attn.project_memory(t, encoded)).collect();
        let start_h = t.param(p.start.h);
        let start_sb = t.param(p.start.sb);
        let start_sb = self.normalize(t, start_sb);
        let start_st = t.param(p.start.st);
        let start_st = self.normalize(t, start_st);
        DecodeContext { n: cands.len(), encoded, opt_sb, opt_st, keys, cross, start_h, start_sb, start_st }
    }

    /// Value of every option (candidates, then END-TOK) given the already
    /// selected candidates, as an (n+1)×1 column.
    pub fn decoder_values(&self, t: &mut Tape, ctx: &DecodeContext, selected: &[usize]) -> Var {
        self.decoder_values_batch(t, ctx, &[selected])[0]
    }

    /// `decoder_values` for several independent selection prefixes at once.
    /// Each prefix forms its own block of decoder rows; self-attention is
    /// masked so blocks never see each other.
    pub fn decoder_values_batch(&self, t: &mut Tape, ctx: &DecodeContext, prefixes: &[&[usize]]) -> Vec<Var> {
        let p = &self.params;
        let mut rows = Vec::new();
        let mut blocks = Vec::with_capacity(prefixes.len());
        for pre in prefixes {
            blocks.push((rows.len(), pre.len() + 1));
            rows.push(0);
            rows.extend(pre.iter().map(|&i| i + 1));
        }
        let r = rows.len();
        let mask = if blocks.len() > 1 {
            let mut m = Matrix::filled(r, r, -1e9);
            for &(off, len) in &blocks {
                for i in off..off + len {
                    for j in off..off + len {
                        m.set(i, j, 0.0);
                    }
                }
            }
            Some(t.constant(m))
        } else {
            None
        };
        let table = t.concat_rows(&[ctx.start_h, ctx.encoded]);
        let mut x = t.gather_rows(table, &rows);
        for (l, &kv) in p.decoder.iter().zip(&ctx.cross) {
            let sk = l.self_attn.project_memory(t, x);
            let a = l.self_attn.apply_masked(t, x, sk, mask);
            let res = t.add(x, a);
            x = l.ln1.apply(t, res);
            let c = l.cross_attn.apply_projected(t, x, kv);
            let res = t.add(x, c);
            x = l.ln2.apply(t, res);
            let f = l.ffn.apply(t, x);
            let res = t.add(x, f);
            x = l.ln3.apply(t, res);
        }
        let q = p.score_q.apply(t, x);
        let qt = t.transpose(q);
        let alpha = t.matmul(ctx.keys, qt);
        let alpha = t.scale(alpha, 1.0 / (self.config.model_dim() as f64).sqrt());
        let alpha = t.tanh(alpha);
        let sigs = |t: &mut Tape, start: Var, opts: Var| {
            let table = t.concat_rows(&[start, opts]);
            let d = t.gather_rows(table, &rows);
            let d = t.transpose(d);
            t.matmul(opts, d)
        };
        let sb_dot = sigs(t, ctx.start_sb, ctx.opt_sb);
        let st_dot = sigs(t, ctx.start_st, ctx.opt_st);
        let (m, k) = t.shape(alpha);
        let feats: Vec<Var> = [alpha, sb_dot, st_dot].iter().map(|&v| t.reshape(v, m * k, 1)).collect();
        let feats = t.concat_cols(&feats);
        let pi = p.pi.apply(t, feats);
        let pi = t.reshape(pi, m, k);
        let pooled: Vec<Var> = blocks
            .iter()
            .map(|&(off, len)| {
                let s = if blocks.len() > 1 { t.slice_cols(pi, off, len) } else { pi };
                pool(t, s)
            })
            .collect();
        let all = if pooled.len() == 1 { pooled[0] } else { t.concat_rows(&pooled) };
        let values = p.value.apply(t, all);
        if blocks.len() == 1 {
            return vec![values];
        }
        (0..blocks.len()).map(|j| t.slice_rows(values, j * m, m)).collect()
    }

    /// Option values of the candidate inference selector as a 1×(k+1) row
    /// over the `remaining` base nodes followed by the end vector, or `None`
    /// when there is nothing to attend to.
    pub fn ci_values(&self, t: &mut Tape, sig: Var, keys: &[usize], remaining: &[usize]) -> Option<Var> {
        if keys.is_empty() {
            return None;
        }
        let p = &self.params;
        let end = t.param(p.ci_end);
        let end = self.normalize(t, end);
        let opts = if remaining.is_empty() {
            end
        } else {
            let rows = t.gather_rows(sig, remaining);
            t.concat_rows(&[rows, end])
        };
        let d = t.gather_rows(sig, keys);
        let q = p.ci_q.apply(t, d);
        let k = p.ci_k.apply(t, opts);
        let qt = t.transpose(q);
        let alpha = t.matmul(k, qt);
        let alpha = t.scale(alpha, 1.0 / (self.config.node_dim as f64).sqrt());
        let alpha = t.tanh(alpha);
        let v = pooled_value(t, &p.ci_value, alpha);
        Some(t.transpose(v))
    }

    /// Teacher-forced losses for one encoding of a training example.
    pub fn loss(
        &self,
        t: &mut Tape,
        ex: &TrainingExample,
        enc: &EncodedPair,
        gold_mass: bool,
        order: GoldOrder,
    ) -> Result<LossParts, ModelError> {
        let emb = self.embed(t, enc)?;
        let cands = self.candidate_set(t, &emb);
        let index: std::collections::HashMap<(NodeId, NodeId), usize> =
            cands.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut gold: Vec<usize> = ex.gold_m.iter().filter_map(|c| index.get(c).copied()).collect();
        let skipped = ex.gold_m.len() - gold.len();
        let mut terms = Vec::new();
        if !cands.is_empty() {
            let encoded = self.encode(t, &emb, &cands);
            let ctx = self.decode_context(t, &emb, &cands, encoded);
            match order {
                GoldOrder::Ascending => {}
                GoldOrder::Descending => gold.reverse(),
                GoldOrder::Model => gold = self.model_order(t, &ctx, gold),
            }
            let prefixes: Vec<&[usize]> = (0..=gold.len()).map(|step| &gold[..step]).collect();
            let all_values = self.decoder_values_batch(t, &ctx, &prefixes);
            let mut chosen = vec![false; cands.len()];
            for (step, &values) in all_values.iter().enumerate() {
                let remaining: Vec<usize> = (0..cands.len()).filter(|&i| !chosen[i]).chain([cands.len()]).collect();
                let pos = |i: usize| remaining.iter().position(|&r| r == i).expect("option remains");
                let targets: Vec<usize> = if step == gold.len() {
                    vec![pos(cands.len())]
                } else if gold_mass {
                    gold[step..].iter().map(|&g| pos(g)).collect()
                } else {
                    vec![pos(gold[step])]
                };
                let col = t.gather_rows(values, &remaining);
                let logits = t.transpose(col);
                terms.push(step_nll(t, logits, &targets, gold_mass));
                if step < gold.len() {
                    chosen[gold[step]] = true;
                }
            }
        }
        let corr = sum_terms(t, &terms);

        let matched: BTreeSet<NodeId> = ex.gold_m.iter().map(|c| c.0).collect();
        let s_in: Vec<usize> = matched.iter().map(|n| n.index()).collect();
        let out: Vec<usize> = ex.base.ids().filter(|n| !matched.contains(n)).map(|n| n.index()).collect();
        let gold_ci: Vec<usize> = ex.gold_ci.iter().map(|n| n.index()).collect();
        let mut terms = Vec::new();
        if !out.is_empty() {
            let mut keys = s_in.clone();
            for step in 0..=gold_ci.len() {
                let remaining: Vec<usize> = out.iter().copied().filter(|o| !gold_ci[..step].contains(o)).collect();
                let Some(logits) = self.ci_values(t, emb.sb, &keys, &remaining) else { break };
                let target = if step == gold_ci.len() {
                    remaining.len()
                } else {
                    remaining.iter().position(|&r| r == gold_ci[step]).expect("gold inference is unmatched")
                };
                terms.push(step_nll(t, logits, &[target], false));
                if step < gold_ci.len() {
                    keys.push(gold_ci[step]);
                }
            }
        }
        let ci = sum_terms(t, &terms);
        Ok(LossParts { corr, ci, gold: ex.gold_m.len(), skipped, candidates: cands.len() })
    }

    /// Reorders `gold` greedily: each step takes the remaining gold option
    /// with the highest current value.
    fn model_order(&self, t: &mut Tape, ctx: &DecodeContext, mut gold: Vec<usize>) -> Vec<usize> {
        let mut ordered = Vec::with_capacity(gold.len());
        while !gold.is_empty() {
            let values = self.decoder_values(t, ctx, &ordered);
            let v = t.value(values);
            let best = (0..gold.len())
                .max_by(|&a, &b| v.get(gold[a], 0).total_cmp(&v.get(gold[b], 0)).then(b.cmp(&a)))
                .expect("nonempty");
            ordered.push(gold.remove(best));
        }
        ordered
    }

    /// Greedy decoding of one encoding.
    pub fn predict_encoded(&self, base: &RelGraph, target: &RelGraph, enc: &EncodedPair) -> Result<Prediction, ModelError> {
        let mut t = Tape::new(&self.store);
        let t = &mut t;
        let emb = self.embed(t, enc)?;
        let cands = self.candidate_set(t, &emb);
        let mut selected: Vec<usize> = Vec::new();
        let mut steps = 0;
        if !cands.is_empty() {
            let encoded = self.encode(t, &emb, &cands);
            let ctx = self.decode_context(t, &emb, &cands, encoded);
            let mut chosen = vec![false; cands.len()];
            while steps <= cands.len() {
                steps += 1;
                let values = self.decoder_values(t, &ctx, &selected);
                let remaining: Vec<usize> = (0..cands.len()).filter(|&i| !chosen[i]).chain([cands.len()]).collect();
                let v = t.value(values);
                let scores: Vec<f64> = remaining.iter().map(|&i| v.get(i, 0)).collect();
                let pick = remaining[argmax(&scores)];
                if pick == cands.len() {
                    break;
                }
                chosen[pick] = true;
                selected.push(pick);
            }
        }
        let correspondences: CorrSet = selected.iter().map(|&i| cands[i]).collect();
        let matched: BTreeSet<NodeId> = correspondences.iter().map(|c| c.0).collect();
        let out: Vec<usize> = base.ids().filter(|n| !matched.contains(n)).map(|n| n.index()).collect();
        let mut keys: Vec<usize> = matched.iter().map(|n| n.index()).collect();
        let mut remaining = out;
        let mut inferences = BTreeSet::new();
        while !remaining.is_empty() {
            let Some(values) = self.ci_values(t, emb.sb, &keys, &remaining) else { break };
            let k = argmax(&t.value(values).data);
            if k == remaining.len() {
                break;
            }
            let node = remaining.remove(k);
            inferences.insert(NodeId(node));
            keys.push(node);
        }
        let score = smt::score(base, target, &correspondences).total;
        Ok(Prediction { mapping: Mapping { correspondences, inferences, score }, candidates: cands, steps })
    }

    /// One randomly encoded run of the full pipeline.
    pub fn predict(&self, base: &RelGraph, target: &RelGraph, rng: &mut impl Rng) -> Result<Prediction, ModelError> {
        let enc = self.encode_pair(base, target, rng)?;
        self.predict_encoded(base, target, &enc)
    }
}

/// Pools each row of a score matrix into (max, min, mean) and maps it
/// through `ffn` to one value per row.
fn pool(t: &mut Tape, scores: Var) -> Var {
    let mx = t.reduce_cols(scores, Reduce::Max);
    let mn = t.reduce_cols(scores, Reduce::Min);
    let me = t.reduce_cols(scores, Reduce::Mean);
    t.concat_cols(&[mx, mn, me])
}

fn pooled_value(t: &mut Tape, ffn: &Ffn, scores: Var) -> Var {
    let pooled = pool(t, scores);
    ffn.apply(t, pooled)
}

/// Negative log-probability of the target options under a softmax over a
/// 1×k row of logits; several targets are scored by their summed mass.
fn step_nll(t: &mut Tape, logits: Var, targets: &[usize], mass: bool) -> Var {
    if mass && targets.len() > 1 {
        let p = t.softmax_rows(logits);
        let at: Vec<(usize, usize)> = targets.iter().map(|&k| (0, k)).collect();
        let picked = t.pick(p, &at);
        let s = t.sum(picked);
        let l = t.ln(s);
        t.scale(l, -1.0)
    } else {
        t.cross_entropy(logits, &targets[..1])
    }
}

fn sum_terms(t: &mut Tape, terms: &[Var]) -> Var {
    match terms {
        [] => t.constant(Matrix::scalar(0.0)),
        [one] => *one,
        _ => {
            let row = t.concat_cols(terms);
            t.sum(row)
        }
    }
}
