//! JSON checkpoint container.
//!
//! Values are written as `f64` with round-trip float formatting, so every
//! tensor (frozen or not) reloads bit-exactly.

use serde::{Deserialize, Serialize};

use super::config::AdapterConfig;
use super::network::MsefModel;
use super::params::ParamStore;
use super::ModelError;
use crate::optim::{AdamConfig, AdamState};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "msef-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenManifest {
    pub names: Vec<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSnapshot {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: AdapterConfig,
    /// Training steps taken so far.
    pub step: u64,
    pub tensors: Vec<NamedTensor>,
    pub frozen_manifest: FrozenManifest,
    pub optimizer: Option<OptimizerSnapshot>,
}

fn to_f64<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|v| v.f64()).collect()
}

fn from_f64<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|v| T::c(*v)).collect()
}

impl Checkpoint {
    pub fn capture<T: Scalar>(model: &MsefModel<T>, step: u64, opt: Option<&AdamState<T>>) -> Self {
        let tensors = model
            .params
            .iter()
            .map(|p| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                trainable: p.trainable,
                data: to_f64(p.value.data()),
            })
            .collect();
        let optimizer = opt.map(|o| OptimizerSnapshot {
            config: o.config,
            step: o.step,
            m: o.m.iter().map(|b| to_f64(b)).collect(),
            v: o.v.iter().map(|b| to_f64(b)).collect(),
        });
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            step,
            tensors,
            frozen_manifest: FrozenManifest { names: model.params.frozen_names(), sha256: model.frozen_hash() },
            optimizer,
        }
    }

    /// Rebuilds the model, checking the frozen manifest against the
    /// restored tensors.
    pub fn restore<T: Scalar>(&self) -> Result<(MsefModel<T>, Option<AdamState<T>>), ModelError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported container {} v{}",
                self.format, self.version
            )));
        }
        let mut model = MsefModel::<T>::new(self.config.clone())?;
        let mut store = ParamStore::new();
        for t in &self.tensors {
            let fresh = model
                .params
                .get(&t.name)
                .ok_or_else(|| ModelError::Checkpoint(format!("unexpected tensor {}", t.name)))?;
            if fresh.shape() != t.shape.as_slice() {
                return Err(ModelError::Checkpoint(format!("tensor {} has shape {:?}", t.name, t.shape)));
            }
            store.insert(&t.name, Tensor::new(t.shape.clone(), from_f64(&t.data))?, t.trainable);
        }
        if store.len() != model.params.len() {
            return Err(ModelError::Checkpoint(format!(
                "{} tensors stored, model has {}",
                store.len(),
                model.params.len()
            )));
        }
        model.params = store;
        if model.frozen_hash() != self.frozen_manifest.sha256 {
            return Err(ModelError::Checkpoint("frozen tensors do not match the manifest hash".into()));
        }
        let opt = match &self.optimizer {
            None => None,
            Some(o) => {
                let sizes: Vec<usize> = o.m.iter().map(Vec::len).collect();
                let mut st = AdamState::new(o.config, &sizes);
                st.step = o.step;
                st.m = o.m.iter().map(|b| from_f64(b)).collect();
                st.v = o.v.iter().map(|b| from_f64(b)).collect();
                Some(st)
            }
        };
        Ok((model, opt))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }
}
