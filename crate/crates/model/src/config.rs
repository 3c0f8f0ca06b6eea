use amn_core::encoding::EncodingConfig;
use amn_tensor::AdamConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Signature embeddings are used without scaling to unit length.
    NoSigNorm,
    /// The signature graph is dropped; label embeddings stand in for signatures.
    NoSigGraph,
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Ablation::None),
            "no-sig-norm" => Ok(Ablation::NoSigNorm),
            "no-sig-graph" => Ok(Ablation::NoSigGraph),
            _ => Err(format!("unknown ablation `{s}` (expected none, no-sig-norm or no-sig-graph)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// DAG LSTM node embedding size; correspondence vectors are four of these.
    pub node_dim: usize,
    pub heads: usize,
    /// Total query/key/value projection size across heads.
    pub attn_dim: usize,
    pub layers: usize,
    /// Transformer FFN hidden size as a multiple of its input size.
    pub ffn_mult: usize,
    /// Hidden width of the scoring and value networks.
    pub value_hidden: usize,
    /// Label-embedding distance under which a node pair becomes a candidate.
    pub epsilon: f64,
    pub ablation: Ablation,
    pub encoding: EncodingConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            node_dim: 32,
            heads: 4,
            attn_dim: 128,
            layers: 2,
            ffn_mult: 2,
            value_hidden: 64,
            epsilon: 1e-5,
            ablation: Ablation::None,
            encoding: EncodingConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn model_dim(&self) -> usize {
        4 * self.node_dim
    }

    pub fn edge_types(&self) -> usize {
        self.encoding.max_arity + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.node_dim == 0 || self.attn_dim == 0 || self.value_hidden == 0 || self.ffn_mult == 0 {
            return Err("dimensions must be positive".into());
        }
        if self.heads == 0 || self.attn_dim % self.heads != 0 {
            return Err(format!("attn_dim {} is not divisible by {} heads", self.attn_dim, self.heads));
        }
        if !(self.epsilon >= 0.0) {
            return Err("epsilon must be non-negative".into());
        }
        Ok(())
    }
}

/// Order in which teacher forcing feeds the gold correspondences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoldOrder {
    /// Ascending (base, target) id.
    Ascending,
    /// Descending (base, target) id.
    Descending,
    /// At each step, the remaining gold option the model currently values most.
    #[default]
    Model,
}

impl std::str::FromStr for GoldOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ascending" => Ok(GoldOrder::Ascending),
            "descending" => Ok(GoldOrder::Descending),
            "model" => Ok(GoldOrder::Model),
            _ => Err(format!("unknown gold order `{s}` (expected ascending, descending or model)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: u64,
    /// Re-encodings of one example per optimizer step.
    pub batch: usize,
    /// Weight of the candidate inference loss.
    pub lambda: f64,
    /// Score the summed probability of every remaining gold option instead
    /// of the canonical next one.
    pub gold_mass: bool,
    pub order: GoldOrder,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            batch: 8,
            lambda: 0.1,
            gold_mass: false,
            order: GoldOrder::Model,
            adam: AdamConfig { clip_norm: Some(5.0), ..AdamConfig::default() },
            seed: 0,
        }
    }
}
