//! Reverse-mode tape over 2-D matrices.
//!
//! Operations panic on shape mismatches, like slicing out of bounds: they
//! indicate a bug in the calling model rather than bad input data.

use std::collections::HashMap;

use crate::matrix::gemm;
use crate::param::{Gradients, ParamId, ParamStore};
use crate::{Matrix, TensorError};

const LN_EPS: f64 = 1e-5;
const NORM_EPS: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Max,
    Min,
    Mean,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRow(Var, Var),
    MulRow(Var, Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    Sigmoid(Var),
    Tanh(Var),
    Elu(Var),
    Ln(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    LayerNormRows(Var, Vec<f64>),
    RowDot(Var, Var),
    L2NormalizeRows(Var, Vec<f64>),
    Pick(Var, Vec<(usize, usize)>),
    Sum(Var),
    ReduceCols(Var, Reduce, Vec<usize>),
}

enum Value {
    Owned(Matrix),
    Param(ParamId),
}

struct Node {
    value: Value,
    op: Op,
}

/// Records a computation for one backward pass. Parameters are read from the
/// store by reference; gradients are returned separately so several tapes
/// can share one store.
pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape { store, nodes: Vec::new(), params: HashMap::new() }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        match &self.nodes[v.0].value {
            Value::Owned(m) => m,
            Value::Param(id) => self.store.value(*id),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        debug_assert!(value.data.iter().all(|x| !x.is_nan()), "NaN produced by {op:?}");
        self.nodes.push(Node { value: Value::Owned(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf)
    }

    pub fn scalar(&mut self, x: f64) -> Var {
        self.constant(Matrix::scalar(x))
    }

    /// The parameter as a tape value; repeated calls return the same handle.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        self.nodes.push(Node { value: Value::Param(id), op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    /// A copy of `v` that blocks gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let m = self.value(v).clone();
        self.constant(m)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        let mut c = Matrix::zeros(x.rows, y.cols);
        gemm(1.0, x, false, y, false, 0.0, &mut c);
        self.push(c, Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let m = self.value(a).transpose();
        self.push(m, Op::Transpose(a))
    }

    /// Reinterprets the row-major data with a new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.len(), rows * cols, "reshape: {}x{} into {rows}x{cols}", x.rows, x.cols);
        let m = Matrix::from_vec(rows, cols, x.data.clone());
        self.push(m, Op::Reshape(a))
    }

    fn zip(&self, a: Var, b: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "{what}: shape mismatch");
        Matrix::from_vec(x.rows, x.cols, x.data.iter().zip(&y.data).map(|(&p, &q)| f(p, q)).collect())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let m = self.zip(a, b, "add", |p, q| p + q);
        self.push(m, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let m = self.zip(a, b, "sub", |p, q| p - q);
        self.push(m, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let m = self.zip(a, b, "mul", |p, q| p * q);
        self.push(m, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let m = self.value(a).map(|x| x * s);
        self.push(m, Op::Scale(a, s))
    }

    fn broadcast_row(&self, a: Var, row: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (x, r) = (self.value(a), self.value(row));
        assert!(r.rows == 1 && r.cols == x.cols, "{what}: expected 1x{} row, got {}x{}", x.cols, r.rows, r.cols);
        let mut out = x.clone();
        for i in 0..x.rows {
            for (o, &b) in out.row_mut(i).iter_mut().zip(&r.data) {
                *o = f(*o, b);
            }
        }
        out
    }

    /// Adds a 1×c row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let m = self.broadcast_row(a, row, "add_row", |p, q| p + q);
        self.push(m, Op::AddRow(a, row))
    }

    /// Multiplies every row of `a` elementwise by a 1×c row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let m = self.broadcast_row(a, row, "mul_row", |p, q| p * q);
        self.push(m, Op::MulRow(a, row))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let m = self.value(p);
            assert_eq!(m.rows, rows, "concat_cols: row counts differ");
            for r in 0..rows {
                out.row_mut(r)[off..off + m.cols].copy_from_slice(m.row(r));
            }
            off += m.cols;
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let m = self.value(p);
            assert_eq!(m.cols, cols, "concat_rows: column counts differ");
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.cols, "slice_cols out of range");
        let mut out = Matrix::zeros(x.rows, len);
        for r in 0..x.rows {
            out.row_mut(r).copy_from_slice(&x.row(r)[start..start + len]);
        }
        self.push(out, Op::SliceCols(a, start))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.rows, "slice_rows out of range");
        let data = x.data[start * x.cols..(start + len) * x.cols].to_vec();
        let cols = x.cols;
        self.push(Matrix::from_vec(len, cols, data), Op::SliceRows(a, start))
    }

    /// Row `i` of the output is row `idx[i]` of `a`.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let x = self.value(a);
        let mut out = Matrix::zeros(idx.len(), x.cols);
        for (i, &j) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(x.row(j));
        }
        self.push(out, Op::GatherRows(a, idx.to_vec()))
    }

    /// Output has `rows` rows; row `i` of `a` is added into row `idx[i]`.
    pub fn scatter_add_rows(&mut self, a: Var, idx: &[usize], rows: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows, idx.len(), "scatter_add_rows: index count");
        let mut out = Matrix::zeros(rows, x.cols);
        for (i, &j) in idx.iter().enumerate() {
            for (o, v) in out.row_mut(j).iter_mut().zip(x.row(i)) {
                *o += v;
            }
        }
        self.push(out, Op::ScatterAddRows(a, idx.to_vec()))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let m = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(m, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let m = self.value(a).map(f64::tanh);
        self.push(m, Op::Tanh(a))
    }

    /// ELU with α = 1.
    pub fn elu(&mut self, a: Var) -> Var {
        let m = self.value(a).map(|x| if x > 0.0 { x } else { x.exp_m1() });
        self.push(m, Op::Elu(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let m = self.value(a).map(f64::ln);
        self.push(m, Op::Ln(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        assert!(x.cols > 0, "softmax over an empty row");
        let mut out = x.clone();
        for r in 0..x.rows {
            let row = out.row_mut(r);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = (*v - mx).exp();
                s += *v;
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        self.push(out, Op::SoftmaxRows(a))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        assert!(x.cols > 0, "log_softmax over an empty row");
        let mut out = x.clone();
        for r in 0..x.rows {
            let row = out.row_mut(r);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|v| *v -= lse);
        }
        self.push(out, Op::LogSoftmaxRows(a))
    }

    /// Normalizes each row to zero mean and unit variance (no affine part).
    pub fn layer_norm_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        assert!(x.cols > 0, "layer_norm over an empty row");
        let mut out = x.clone();
        let mut inv = Vec::with_capacity(x.rows);
        let n = x.cols as f64;
        for r in 0..x.rows {
            let row = out.row_mut(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let s = 1.0 / (var + LN_EPS).sqrt();
            row.iter_mut().for_each(|v| *v = (*v - mean) * s);
            inv.push(s);
        }
        self.push(out, Op::LayerNormRows(a, inv))
    }

    /// Per-row dot product, r×c · r×c → r×1.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "row_dot: shape mismatch");
        let data = (0..x.rows).map(|r| x.row(r).iter().zip(y.row(r)).map(|(p, q)| p * q).sum()).collect();
        let rows = x.rows;
        self.push(Matrix::from_vec(rows, 1, data), Op::RowDot(a, b))
    }

    /// Scales each row to unit Euclidean length.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        let mut norms = Vec::with_capacity(x.rows);
        for r in 0..x.rows {
            let row = out.row_mut(r);
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_EPS);
            row.iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        }
        self.push(out, Op::L2NormalizeRows(a, norms))
    }

    /// 1×k row holding `a[r][c]` for each listed position.
    pub fn pick(&mut self, a: Var, at: &[(usize, usize)]) -> Var {
        let x = self.value(a);
        let data = at.iter().map(|&(r, c)| x.get(r, c)).collect();
        self.push(Matrix::row_vector(data), Op::Pick(a, at.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Matrix::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Reduces each row to one value, r×c → r×1.
    pub fn reduce_cols(&mut self, a: Var, how: Reduce) -> Var {
        let x = self.value(a);
        assert!(x.cols > 0, "reduce over an empty row");
        let mut data = Vec::with_capacity(x.rows);
        let mut arg = Vec::new();
        for r in 0..x.rows {
            let row = x.row(r);
            match how {
                Reduce::Mean => data.push(row.iter().sum::<f64>() / row.len() as f64),
                Reduce::Max | Reduce::Min => {
                    let mut best = 0;
                    for (i, &v) in row.iter().enumerate() {
                        let better = if how == Reduce::Max { v > row[best] } else { v < row[best] };
                        if better {
                            best = i;
                        }
                    }
                    data.push(row[best]);
                    arg.push(best);
                }
            }
        }
        let rows = x.rows;
        self.push(Matrix::from_vec(rows, 1, data), Op::ReduceCols(a, how, arg))
    }

    /// Summed negative log-likelihood of `classes[i]` under row `i` of `logits`.
    pub fn cross_entropy(&mut self, logits: Var, classes: &[usize]) -> Var {
        let lsm = self.log_softmax_rows(logits);
        let at: Vec<(usize, usize)> = classes.iter().enumerate().map(|(r, &c)| (r, c)).collect();
        let picked = self.pick(lsm, &at);
        let s = self.sum(picked);
        self.scale(s, -1.0)
    }

    /// Reverse pass from a 1×1 `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(TensorError::NonScalarLoss(shape.0, shape.1));
        }
        let mut grads: Vec<Option<Matrix>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));
        let mut out = Gradients { grads: vec![None; self.store.len()] };
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads, &mut out);
        }
        Ok(out)
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>], out: &mut Gradients) {
        let y = self.value(Var(i));
        let acc = |grads: &mut [Option<Matrix>], v: Var, d: Matrix| match &mut grads[v.0] {
            Some(m) => m.add_assign(&d),
            slot => *slot = Some(d),
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Param(id) => match &mut out.grads[id.0] {
                Some(m) => m.add_assign(g),
                slot => *slot = Some(g.clone()),
            },
            Op::MatMul(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                let mut da = Matrix::zeros(x.rows, x.cols);
                gemm(1.0, g, false, w, true, 0.0, &mut da);
                let mut db = Matrix::zeros(w.rows, w.cols);
                gemm(1.0, x, true, g, false, 0.0, &mut db);
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::Transpose(a) => acc(grads, *a, g.transpose()),
            Op::Reshape(a) => {
                let x = self.value(*a);
                acc(grads, *a, Matrix::from_vec(x.rows, x.cols, g.data.clone()));
            }
            Op::Add(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                let da = zip_with(g, w, |p, q| p * q);
                let db = zip_with(g, x, |p, q| p * q);
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::Scale(a, s) => acc(grads, *a, g.map(|x| x * s)),
            Op::AddRow(a, row) => {
                acc(grads, *a, g.clone());
                acc(grads, *row, column_sums(g));
            }
            Op::MulRow(a, row) => {
                let (x, r) = (self.value(*a), self.value(*row));
                let mut da = g.clone();
                let mut dr = Matrix::zeros(1, r.cols);
                for i in 0..g.rows {
                    for c in 0..g.cols {
                        da.data[i * g.cols + c] *= r.data[c];
                        dr.data[c] += g.data[i * g.cols + c] * x.data[i * g.cols + c];
                    }
                }
                acc(grads, *a, da);
                acc(grads, *row, dr);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let cols = self.value(p).cols;
                    let mut d = Matrix::zeros(g.rows, cols);
                    for r in 0..g.rows {
                        d.row_mut(r).copy_from_slice(&g.row(r)[off..off + cols]);
                    }
                    off += cols;
                    acc(grads, p, d);
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let rows = self.value(p).rows;
                    let d = Matrix::from_vec(rows, g.cols, g.data[off * g.cols..(off + rows) * g.cols].to_vec());
                    off += rows;
                    acc(grads, p, d);
                }
            }
            Op::SliceCols(a, start) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for r in 0..g.rows {
                    d.row_mut(r)[*start..*start + g.cols].copy_from_slice(g.row(r));
                }
                acc(grads, *a, d);
            }
            Op::SliceRows(a, start) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                d.data[start * x.cols..(start + g.rows) * x.cols].copy_from_slice(&g.data);
                acc(grads, *a, d);
            }
            Op::GatherRows(a, idx) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for (r, &j) in idx.iter().enumerate() {
                    for (o, v) in d.row_mut(j).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                acc(grads, *a, d);
            }
            Op::ScatterAddRows(a, idx) => {
                let mut d = Matrix::zeros(idx.len(), g.cols);
                for (r, &j) in idx.iter().enumerate() {
                    d.row_mut(r).copy_from_slice(g.row(j));
                }
                acc(grads, *a, d);
            }
            Op::Sigmoid(a) => acc(grads, *a, zip_with(g, y, |p, s| p * s * (1.0 - s))),
            Op::Tanh(a) => acc(grads, *a, zip_with(g, y, |p, t| p * (1.0 - t * t))),
            Op::Elu(a) => {
                let x = self.value(*a);
                let d = Matrix::from_vec(
                    x.rows,
                    x.cols,
                    x.data
                        .iter()
                        .zip(&y.data)
                        .zip(&g.data)
                        .map(|((&xi, &yi), &gi)| if xi > 0.0 { gi } else { gi * (yi + 1.0) })
                        .collect(),
                );
                acc(grads, *a, d);
            }
            Op::Ln(a) => acc(grads, *a, zip_with(g, self.value(*a), |p, x| p / x)),
            Op::SoftmaxRows(a) => {
                let mut d = Matrix::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(p, q)| p * q).sum();
                    for c in 0..y.cols {
                        d.data[r * y.cols + c] = y.get(r, c) * (g.get(r, c) - dot);
                    }
                }
                acc(grads, *a, d);
            }
            Op::LogSoftmaxRows(a) => {
                let mut d = Matrix::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let s: f64 = g.row(r).iter().sum();
                    for c in 0..y.cols {
                        d.data[r * y.cols + c] = g.get(r, c) - y.get(r, c).exp() * s;
                    }
                }
                acc(grads, *a, d);
            }
            Op::LayerNormRows(a, inv) => {
                let n = y.cols as f64;
                let mut d = Matrix::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let mg = gr.iter().sum::<f64>() / n;
                    let mgy = gr.iter().zip(yr).map(|(p, q)| p * q).sum::<f64>() / n;
                    for c in 0..y.cols {
                        d.data[r * y.cols + c] = inv[r] * (gr[c] - mg - yr[c] * mgy);
                    }
                }
                acc(grads, *a, d);
            }
            Op::RowDot(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                let mut da = Matrix::zeros(x.rows, x.cols);
                let mut db = Matrix::zeros(x.rows, x.cols);
                for r in 0..x.rows {
                    let gr = g.data[r];
                    for c in 0..x.cols {
                        da.data[r * x.cols + c] = gr * w.get(r, c);
                        db.data[r * x.cols + c] = gr * x.get(r, c);
                    }
                }
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::L2NormalizeRows(a, norms) => {
                let mut d = Matrix::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let dot: f64 = gr.iter().zip(yr).map(|(p, q)| p * q).sum();
                    for c in 0..y.cols {
                        d.data[r * y.cols + c] = (gr[c] - yr[c] * dot) / norms[r];
                    }
                }
                acc(grads, *a, d);
            }
            Op::Pick(a, at) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for (k, &(r, c)) in at.iter().enumerate() {
                    d.data[r * x.cols + c] += g.data[k];
                }
                acc(grads, *a, d);
            }
            Op::Sum(a) => {
                let x = self.value(*a);
                acc(grads, *a, Matrix::filled(x.rows, x.cols, g.data[0]));
            }
            Op::ReduceCols(a, how, arg) => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows, x.cols);
                for r in 0..x.rows {
                    match how {
                        Reduce::Mean => {
                            let v = g.data[r] / x.cols as f64;
                            d.row_mut(r).iter_mut().for_each(|o| *o = v);
                        }
                        Reduce::Max | Reduce::Min => d.data[r * x.cols + arg[r]] = g.data[r],
                    }
                }
                acc(grads, *a, d);
            }
        }
    }
}

fn zip_with(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    Matrix::from_vec(a.rows, a.cols, a.data.iter().zip(&b.data).map(|(&p, &q)| f(p, q)).collect())
}

fn column_sums(g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, g.cols);
    for r in 0..g.rows {
        for (o, v) in out.data.iter_mut().zip(g.row(r)) {
            *o += v;
        }
    }
    out
}
