use amn_core::synth::TrainingExample;
use amn_tensor::{Adam, Tape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::{Amn, ModelError};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Mean over the batch.
    pub loss_corr: f64,
    pub loss_ci: f64,
    pub gold: usize,
    /// Gold correspondences missing from the candidate set, summed over the batch.
    pub skipped: usize,
    pub candidates: usize,
}

impl StepStats {
    pub fn total(&self, lambda: f64) -> f64 {
        self.loss_corr + lambda * self.loss_ci
    }
}

/// Encoding rng for re-encoding `k` of training step `step`.
pub fn encoding_rng(seed: u64, step: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step.wrapping_mul(1 << 8).wrapping_add(k as u64));
    rng
}

/// Accumulates the batch-mean gradient of `L_corr + λ L_ci` into the
/// parameter store without updating.
pub fn accumulate_gradients(
    model: &mut Amn,
    ex: &TrainingExample,
    cfg: &TrainConfig,
    step: u64,
) -> Result<StepStats, ModelError> {
    let mut stats = StepStats::default();
    let batch = cfg.batch.max(1);
    for k in 0..batch {
        let mut rng = encoding_rng(cfg.seed, step, k);
        let enc = model.encode_pair(&ex.base, &ex.target, &mut rng)?;
        let grads = {
            let mut t = Tape::new(&model.store);
            let parts = model.loss(&mut t, ex, &enc, cfg.gold_mass, cfg.order)?;
            let ci = t.scale(parts.ci, cfg.lambda);
            let total = t.add(parts.corr, ci);
            stats.loss_corr += t.value(parts.corr).item() / batch as f64;
            stats.loss_ci += t.value(parts.ci).item() / batch as f64;
            stats.gold = parts.gold;
            stats.skipped += parts.skipped;
            stats.candidates += parts.candidates;
            t.backward(total)?
        };
        model.store.accumulate_scaled(&grads, 1.0 / batch as f64);
    }
    Ok(stats)
}

/// One optimizer step on a batch of re-encodings of `ex`.
pub fn train_step(
    model: &mut Amn,
    adam: &mut Adam,
    ex: &TrainingExample,
    cfg: &TrainConfig,
    step: u64,
) -> Result<StepStats, ModelError> {
    let stats = accumulate_gradients(model, ex, cfg, step)?;
    adam.step(&mut model.store)?;
    Ok(stats)
}
