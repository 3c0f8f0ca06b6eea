//! Parameterized building blocks recorded onto a tape.

use amn_tensor::{Matrix, ParamId, ParamStore, Tape, Var};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, bias: bool, rng: &mut impl Rng) -> Self {
        let w = store.add_fan_in(&format!("{name}.w"), input, output, rng);
        let b = bias.then(|| store.add_zeros(&format!("{name}.b"), 1, output));
        Linear { w, b }
    }

    pub fn apply(&self, t: &mut Tape, x: Var) -> Var {
        let w = t.param(self.w);
        let y = t.matmul(x, w);
        match self.b {
            Some(b) => {
                let b = t.param(b);
                t.add_row(y, b)
            }
            None => y,
        }
    }
}

/// Linear layers with ELU between them.
#[derive(Debug, Clone)]
pub struct Ffn {
    pub layers: Vec<Linear>,
}

impl Ffn {
    pub fn new(store: &mut ParamStore, name: &str, sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], true, rng))
            .collect();
        Ffn { layers }
    }

    pub fn apply(&self, t: &mut Tape, mut x: Var) -> Var {
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                x = t.elu(x);
            }
            x = l.apply(t, x);
        }
        x
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        let gain = store.add(&format!("{name}.gain"), Matrix::filled(1, dim, 1.0));
        let bias = store.add_zeros(&format!("{name}.bias"), 1, dim);
        LayerNorm { gain, bias }
    }

    pub fn apply(&self, t: &mut Tape, x: Var) -> Var {
        let n = t.layer_norm_rows(x);
        let g = t.param(self.gain);
        let b = t.param(self.bias);
        let y = t.mul_row(n, g);
        t.add_row(y, b)
    }
}

/// Multi-headed scaled dot-product attention.
#[derive(Debug, Clone)]
pub struct Mha {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
    pub head_dim: usize,
}

impl Mha {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, attn_dim: usize, heads: usize, rng: &mut impl Rng) -> Self {
        Mha {
            q: Linear::new(store, &format!("{name}.q"), dim, attn_dim, false, rng),
            k: Linear::new(store, &format!("{name}.k"), dim, attn_dim, false, rng),
            v: Linear::new(store, &format!("{name}.v"), dim, attn_dim, false, rng),
            o: Linear::new(store, &format!("{name}.o"), attn_dim, dim, false, rng),
            heads,
            head_dim: attn_dim / heads,
        }
    }

    /// Projected keys and values of `memory`, reusable across queries.
    pub fn project_memory(&self, t: &mut Tape, memory: Var) -> (Var, Var) {
        (self.k.apply(t, memory), self.v.apply(t, memory))
    }

    pub fn apply(&self, t: &mut Tape, queries: Var, memory: Var) -> Var {
        let kv = self.project_memory(t, memory);
        self.apply_projected(t, queries, kv)
    }

    pub fn apply_projected(&self, t: &mut Tape, queries: Var, kv: (Var, Var)) -> Var {
        self.apply_masked(t, queries, kv, None)
    }

    /// Attention with an additive score mask (queries × memory rows).
    pub fn apply_masked(&self, t: &mut Tape, queries: Var, (k, v): (Var, Var), mask: Option<Var>) -> Var {
        let q = self.q.apply(t, queries);
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut outs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let off = h * self.head_dim;
            let qh = t.slice_cols(q, off, self.head_dim);
            let kh = t.slice_cols(k, off, self.head_dim);
            let vh = t.slice_cols(v, off, self.head_dim);
            let kt = t.transpose(kh);
            let w = t.matmul(qh, kt);
            let w = t.scale(w, scale);
            let w = match mask {
                Some(m) => t.add(w, m),
                None => w,
            };
            let a = t.softmax_rows(w);
            outs.push(t.matmul(a, vh));
        }
        let cat = if outs.len() == 1 { outs[0] } else { t.concat_cols(&outs) };
        self.o.apply(t, cat)
    }
}
