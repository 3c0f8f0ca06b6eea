use std::collections::HashMap;

use rand::Rng;

use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

/// Named trainable tensors with gradient buffers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// # Panics
    /// If `name` is already registered.
    pub fn add(&mut self, name: &str, value: Matrix) -> ParamId {
        assert!(!self.index.contains_key(name), "duplicate parameter `{name}`");
        let id = ParamId(self.params.len());
        let grad = Matrix::zeros(value.rows, value.cols);
        self.params.push(Param { name: name.to_string(), value, grad });
        self.index.insert(name.to_string(), id);
        id
    }

    /// Uniform in `[-bound, bound]`.
    pub fn add_uniform(&mut self, name: &str, rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> ParamId {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.add(name, Matrix::from_vec(rows, cols, data))
    }

    /// Uniform in `±1/sqrt(fan_in)` where `fan_in = rows`.
    pub fn add_fan_in(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> ParamId {
        self.add_uniform(name, rows, cols, 1.0 / (rows.max(1) as f64).sqrt(), rng)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, Matrix::zeros(rows, cols))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn element_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Adds `g` into the stored gradient buffers.
    pub fn accumulate(&mut self, g: &Gradients) {
        for (i, grad) in g.grads.iter().enumerate() {
            if let Some(grad) = grad {
                self.params[i].grad.add_assign(grad);
            }
        }
    }

    /// Adds `scale * g` into the stored gradient buffers.
    pub fn accumulate_scaled(&mut self, g: &Gradients, scale: f64) {
        for (i, grad) in g.grads.iter().enumerate() {
            if let Some(grad) = grad {
                for (a, b) in self.params[i].grad.data.iter_mut().zip(&grad.data) {
                    *a += scale * b;
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.data.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params.iter().flat_map(|p| p.grad.data.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Parameter gradients produced by one backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub(crate) grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `id`, or zeros of the parameter's shape.
    pub fn get_or_zeros(&self, store: &ParamStore, id: ParamId) -> Matrix {
        self.get(id).cloned().unwrap_or_else(|| {
            let v = store.value(id);
            Matrix::zeros(v.rows, v.cols)
        })
    }

    pub fn add(&mut self, other: &Gradients) {
        if self.grads.len() < other.grads.len() {
            self.grads.resize(other.grads.len(), None);
        }
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                match &mut self.grads[i] {
                    Some(mine) => mine.add_assign(g),
                    slot => *slot = Some(g.clone()),
                }
            }
        }
    }
}
