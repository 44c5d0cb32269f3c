//! Named parameter storage and per-graph binding.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::autodiff::{Graph, Var};
use crate::scalar::Scalar;
use crate::tensor::{Result, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T: Scalar> {
    pub name: String,
    pub value: Tensor<T>,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T: Scalar> {
    params: Vec<Param<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new(), index: HashMap::new() }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<T>, trainable: bool) {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        self.index.insert(name.to_string(), self.params.len());
        self.params.push(Param { name: name.to_string(), value, trainable });
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.id(name).map(|i| &self.params[i].value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.id(name).map(move |i| &mut self.params[i].value)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    pub fn by_index(&self, i: usize) -> &Param<T> {
        &self.params[i]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn trainable_ids(&self) -> Vec<usize> {
        (0..self.params.len()).filter(|i| self.params[*i].trainable).collect()
    }

    pub fn frozen_names(&self) -> Vec<String> {
        self.params.iter().filter(|p| !p.trainable).map(|p| p.name.clone()).collect()
    }

    pub fn count(&self, trainable: bool) -> usize {
        self.params.iter().filter(|p| p.trainable == trainable).map(|p| p.value.numel()).sum()
    }

    /// Fraction of scalar weights that are frozen.
    pub fn frozen_fraction(&self) -> f64 {
        let frozen = self.count(false) as f64;
        frozen / (frozen + self.count(true) as f64)
    }

    /// SHA-256 over every frozen tensor's name, shape and value bits.
    pub fn frozen_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in self.params.iter().filter(|p| !p.trainable) {
            h.update((p.name.len() as u64).to_le_bytes());
            h.update(p.name.as_bytes());
            for s in p.value.shape() {
                h.update((*s as u64).to_le_bytes());
            }
            for v in p.value.data() {
                h.update(v.f64().to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Lazily inserts parameters into a graph, once per graph.
pub struct Binder<'a, T: Scalar> {
    pub graph: Graph<T>,
    store: &'a ParamStore<T>,
    bound: HashMap<usize, Var>,
    track: bool,
}

impl<'a, T: Scalar> Binder<'a, T> {
    /// `track` marks trainable parameters as requiring gradients.
    pub fn new(store: &'a ParamStore<T>, track: bool) -> Self {
        Self { graph: Graph::new(), store, bound: HashMap::new(), track }
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        let id = self
            .store
            .id(name)
            .unwrap_or_else(|| panic!("model parameter {name} missing from store"));
        if let Some(v) = self.bound.get(&id) {
            return Ok(*v);
        }
        let p = self.store.by_index(id);
        let mut t = p.value.detach();
        t.requires_grad = self.track && p.trainable;
        let v = self.graph.leaf(t)?;
        self.bound.insert(id, v);
        Ok(v)
    }

    pub fn has(&self, name: &str) -> bool {
        self.store.id(name).is_some()
    }

    /// `(store index, graph var)` for every bound trainable parameter.
    pub fn bound_trainables(&self) -> Vec<(usize, Var)> {
        let mut out: Vec<(usize, Var)> = self
            .bound
            .iter()
            .filter(|(id, _)| self.store.by_index(**id).trainable)
            .map(|(id, v)| (*id, *v))
            .collect();
        out.sort_unstable();
        out
    }
}
