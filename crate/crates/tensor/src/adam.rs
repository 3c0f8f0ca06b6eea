use serde::{Deserialize, Serialize};

use crate::{Matrix, ParamStore, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Rescale the global gradient to at most this norm before the update.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm: None }
    }
}

/// Adam with bias correction. Reads and clears the gradient buffers in the store.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    moments: Option<Vec<(Matrix, Matrix)>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam { config, step: 0, moments: None }
    }

    /// Allocates zeroed moments shaped like `store`.
    pub fn init(&mut self, store: &ParamStore) {
        let m = store
            .iter()
            .map(|(_, p)| (Matrix::zeros(p.value.rows, p.value.cols), Matrix::zeros(p.value.rows, p.value.cols)))
            .collect();
        self.moments = Some(m);
        self.step = 0;
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<(), TensorError> {
        let moments = self.moments.as_mut().ok_or(TensorError::Uninitialized)?;
        if moments.len() != store.len() {
            return Err(TensorError::StateMismatch(format!("{} moments for {} parameters", moments.len(), store.len())));
        }
        for ((_, p), (m, _)) in store.iter().zip(moments.iter()) {
            if m.shape() != p.value.shape() {
                return Err(TensorError::StateMismatch(format!("shape of `{}` changed", p.name)));
            }
        }
        let c = self.config;
        let scale = match c.clip_norm {
            Some(max) => {
                let n = store.grad_norm();
                if n > max { max / n } else { 1.0 }
            }
            None => 1.0,
        };
        self.step += 1;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (p, (m, v)) in store.iter_mut().zip(moments.iter_mut()) {
            for i in 0..p.value.data.len() {
                let g = p.grad.data[i] * scale;
                m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * g;
                v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * g * g;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.value.data[i] -= c.lr * mh / (vh.sqrt() + c.eps);
            }
        }
        store.zero_grads();
        Ok(())
    }
}
