use serde::{Deserialize, Serialize};

use super::ModelError;

/// One bounded scalar output of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreHead {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ScoreHead {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.to_string(), lo, hi }
    }
}

/// Adaptation and architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub model_dim: usize,
    pub lora_rank: usize,
    pub prefix_len: usize,
    pub num_queries: usize,
    pub num_heads: usize,
    pub patch_size: usize,
    pub vocab_size: usize,
    pub image_size: usize,
    pub vit_layers: usize,
    pub decoder_layers: usize,
    pub ffn_mult: usize,
    pub max_rationale_len: usize,
    pub score_weight: f64,
    pub rationale_weight: f64,
    pub score_heads: Vec<ScoreHead>,
    pub seed: u64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            model_dim: 32,
            lora_rank: 8,
            prefix_len: 16,
            num_queries: 32,
            num_heads: 4,
            patch_size: 4,
            vocab_size: 64,
            image_size: 32,
            vit_layers: 2,
            decoder_layers: 2,
            ffn_mult: 4,
            max_rationale_len: 16,
            score_weight: 1.0,
            rationale_weight: 1.0,
            score_heads: ["walkability", "enclosure", "greenery", "vibrancy"]
                .iter()
                .map(|n| ScoreHead::new(n, 1.0, 5.0))
                .collect(),
            seed: 0,
        }
    }
}

impl AdapterConfig {
    pub fn head_dim(&self) -> usize {
        self.model_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.model_dim == 0 || self.num_heads == 0 || self.num_queries == 0 || self.patch_size == 0 {
            return bad("model_dim, num_heads, num_queries and patch_size must be positive".into());
        }
        if self.lora_rank == 0 || self.lora_rank >= self.model_dim {
            return bad(format!("lora_rank {} must satisfy 0 < r < d = {}", self.lora_rank, self.model_dim));
        }
        if self.model_dim % self.num_heads != 0 {
            return bad(format!("model_dim {} not divisible by num_heads {}", self.model_dim, self.num_heads));
        }
        if self.model_dim < 2 {
            return bad("model_dim must be at least 2".into());
        }
        if self.vocab_size != super::vocab::Vocabulary::default().len() {
            return bad(format!("vocab_size must be {}", super::vocab::Vocabulary::default().len()));
        }
        if self.decoder_layers == 0 {
            return bad("decoder_layers must be positive".into());
        }
        if self.image_size == 0 || self.image_size % self.patch_size != 0 {
            return bad(format!("image_size {} not divisible by patch_size {}", self.image_size, self.patch_size));
        }
        if self.score_heads.is_empty() {
            return bad("at least one score head is required".into());
        }
        for h in &self.score_heads {
            if !(h.lo < h.hi) || !h.lo.is_finite() || !h.hi.is_finite() {
                return bad(format!("score head {} has invalid range [{}, {}]", h.name, h.lo, h.hi));
            }
        }
        let mut names: Vec<&str> = self.score_heads.iter().map(|h| h.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.score_heads.len() {
            return bad("score head names must be unique".into());
        }
        if self.max_rationale_len == 0 {
            return bad("max_rationale_len must be positive".into());
        }
        Ok(())
    }
}
