//! Training loop over a fixed example list.

use std::time::Instant;

use amn_core::synth::TrainingExample;
use amn_model::train::{train_step, StepStats};
use amn_model::{Amn, ModelConfig, TrainConfig};
use amn_tensor::Adam;
use anyhow::{bail, Result};

/// Running means reported every `every` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub step: u64,
    pub loss_corr: f64,
    pub loss_ci: f64,
    pub seconds: f64,
}

/// Trains a fresh model on `examples`, visiting them in order and wrapping
/// around. `log` receives running means every `every` steps.
pub fn train(
    examples: &[TrainingExample],
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    every: u64,
    mut log: impl FnMut(&Progress),
) -> Result<Amn> {
    let mut model = Amn::new(model_cfg, cfg.seed)?;
    continue_training(&mut model, examples, cfg, every, &mut log)?;
    Ok(model)
}

pub fn continue_training(
    model: &mut Amn,
    examples: &[TrainingExample],
    cfg: &TrainConfig,
    every: u64,
    mut log: impl FnMut(&Progress),
) -> Result<()> {
    if examples.is_empty() {
        bail!("empty dataset");
    }
    let mut adam = Adam::new(cfg.adam);
    adam.init(&model.store);
    let start = Instant::now();
    let mut acc = StepStats::default();
    let mut since = 0u64;
    for step in 0..cfg.steps {
        let ex = &examples[(step % examples.len() as u64) as usize];
        let s = train_step(model, &mut adam, ex, cfg, step)?;
        if !(s.loss_corr.is_finite() && s.loss_ci.is_finite()) {
            bail!("non-finite loss at step {step}");
        }
        acc.loss_corr += s.loss_corr;
        acc.loss_ci += s.loss_ci;
        since += 1;
        if every > 0 && ((step + 1) % every == 0 || step + 1 == cfg.steps) {
            log(&Progress {
                step: step + 1,
                loss_corr: acc.loss_corr / since as f64,
                loss_ci: acc.loss_ci / since as f64,
                seconds: start.elapsed().as_secs_f64(),
            });
            acc = StepStats::default();
            since = 0;
        }
    }
    Ok(())
}
