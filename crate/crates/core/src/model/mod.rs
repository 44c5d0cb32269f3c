//! Toy vision-language scorer with LoRA and prefix adaptation.

mod checkpoint;
mod config;
mod layers;
mod network;
mod params;
pub mod vocab;

use thiserror::Error;

use crate::tensor::TensorError;

pub use checkpoint::{Checkpoint, FrozenManifest, NamedTensor, OptimizerSnapshot, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{AdapterConfig, ScoreHead};
pub use layers::{attention, attention_tensors, gated_fusion, lora_apply, position_encoding, prefix_concat, Fused, LoraLayer, PrefixBank};
pub use network::{attention_heatmap, AttentionMap, DualOutput, Example, MsefModel, Stage};
pub use params::{Binder, Param, ParamStore};
pub use vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("token id {id} outside the {size}-symbol vocabulary")]
    Vocabulary { id: usize, size: usize },
    #[error("index error: {0}")]
    Index(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
