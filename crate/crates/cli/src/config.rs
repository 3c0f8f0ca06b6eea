//! Experiment configuration files (TOML).

use std::path::Path;

use amn_core::synth::GenParams;
use amn_model::{ModelConfig, TrainConfig};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::eval::Baseline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub runs: usize,
    pub seed: u64,
    pub baseline: Baseline,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { runs: 8, seed: 0, baseline: Baseline::Gold }
    }
}

/// Every section is optional; missing ones take their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GenParams,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.generator.validate()?;
        cfg.model.validate().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
