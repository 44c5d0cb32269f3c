//! The toy street-evaluation network.
//!
//! Image → patch embedding + frozen ViT blocks → Q-Former compression to
//! `num_queries` latent tokens (LoRA on q/k/v) → decoder over
//! `[prefix; latent tokens; question; rationale]` (last block LoRA-wrapped)
//! → gated fusion of visual and textual summaries → bounded score heads,
//! plus a greedy rationale decoder.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::AdapterConfig;
use super::layers::{attention, gated_fusion, lora_apply, position_encoding, prefix_concat, LoraLayer, PrefixBank, MASKED};
use super::params::{Binder, ParamStore};
use super::vocab::{Vocabulary, BOS, EOS};
use super::ModelError;
use crate::autodiff::Var;
use crate::image::GrayImage;
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::{Result as TResult, Tensor, TensorError};

/// Where an attention map was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Vit(usize),
    QFormer,
    Decoder(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap<T: Scalar> {
    pub stage: Stage,
    pub head: usize,
    pub weights: Tensor<T>,
}

/// Scores, rationale and the attention weights behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualOutput<T: Scalar> {
    pub scores: BTreeMap<String, f64>,
    pub rationale_tokens: Vec<usize>,
    pub attention_maps: Vec<AttentionMap<T>>,
    pub gate: Vec<T>,
    /// Patch grid `(rows, cols)` of the scored image.
    pub patch_grid: (usize, usize),
}

/// One supervised sample with the image already passed through the frozen
/// backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T: Scalar> {
    pub features: Tensor<T>,
    pub question: Vec<usize>,
    pub rationale: Vec<usize>,
    /// `(score head index, target score)` when the sample carries a score.
    pub target: Option<(usize, f64)>,
}

struct ForwardVars {
    scores: Var,
    logits: Option<Var>,
    gate: Var,
    maps: Vec<(Stage, usize, Var)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsefModel<T: Scalar> {
    pub config: AdapterConfig,
    pub params: ParamStore<T>,
    pub vocab: Vocabulary,
}

const PROJ: [&str; 4] = ["q", "k", "v", "o"];

impl<T: Scalar> MsefModel<T> {
    pub fn new(config: AdapterConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let d = config.model_dim;
        let fd = d * config.ffn_mult.max(1);
        let r = config.lora_rank;
        let p2 = config.patch_size * config.patch_size;
        let v = config.vocab_size;
        let seed = config.seed;
        let mut params = ParamStore::new();
        let mut add = |name: &str, shape: &[usize], std: f64, trainable: bool| {
            let t = if std == 0.0 {
                Tensor::zeros(shape)
            } else {
                Tensor::randn(shape, std, &mut rng::stream(seed, rng::key_stream(name)))
            };
            params.insert(name, t, trainable);
        };
        let inv = |n: usize| 1.0 / (n as f64).sqrt();

        add("vit.patch.w", &[p2, d], inv(p2), false);
        add("vit.patch.b", &[d], 0.0, false);

        let block = |add: &mut dyn FnMut(&str, &[usize], f64, bool), pre: &str, lora: bool, trainable_lora: bool| {
            for p in PROJ {
                if lora && p != "o" {
                    add(&format!("{pre}.attn.{p}.w0"), &[d, d], inv(d), false);
                    add(&format!("{pre}.attn.{p}.a"), &[d, r], inv(d), trainable_lora);
                    add(&format!("{pre}.attn.{p}.b"), &[r, d], 0.0, trainable_lora);
                } else {
                    add(&format!("{pre}.attn.{p}"), &[d, d], inv(d), false);
                }
            }
            for ln in ["ln1", "ln2"] {
                add(&format!("{pre}.{ln}.g"), &[d], 0.0, false);
                add(&format!("{pre}.{ln}.b"), &[d], 0.0, false);
            }
            add(&format!("{pre}.ffn.w1"), &[d, fd], inv(d), false);
            add(&format!("{pre}.ffn.b1"), &[fd], 0.0, false);
            add(&format!("{pre}.ffn.w2"), &[fd, d], inv(fd), false);
            add(&format!("{pre}.ffn.b2"), &[d], 0.0, false);
        };
        for l in 0..config.vit_layers {
            block(&mut add, &format!("vit.{l}"), false, false);
        }
        add("qformer.queries", &[config.num_queries, d], 1.0, true);
        block(&mut add, "qformer", true, true);
        add("dec.embed", &[v, d], 1.0, false);
        if config.prefix_len > 0 {
            add("prefix", &[config.prefix_len, d], 0.5, true);
        }
        for l in 0..config.decoder_layers {
            block(&mut add, &format!("dec.{l}"), l + 1 == config.decoder_layers, true);
        }
        add("lm_head", &[d, v], 0.5, false);
        add("gate.w", &[2 * d, d], inv(2 * d), true);
        add("gate.b", &[d], 0.0, true);
        let h = config.score_heads.len();
        add("head.w", &[d, h], inv(d), true);
        add("head.b", &[h], 0.0, true);

        // layer-norm gains start at one
        for p in params.iter_mut() {
            if p.name.ends_with(".g") {
                p.value = Tensor::ones(p.value.shape());
            }
        }
        Ok(Self { config, params, vocab: Vocabulary::default() })
    }

    pub fn head_index(&self, name: &str) -> Option<usize> {
        self.config.score_heads.iter().position(|h| h.name == name)
    }

    pub fn trainable_fraction(&self) -> f64 {
        1.0 - self.params.frozen_fraction()
    }

    pub fn frozen_hash(&self) -> String {
        self.params.frozen_hash()
    }

    /// Names of the LoRA-wrapped projections (prefix of `.w0/.a/.b`).
    pub fn lora_sites(&self) -> Vec<String> {
        self.params
            .iter()
            .filter_map(|p| p.name.strip_suffix(".w0").map(str::to_string))
            .collect()
    }

    pub fn lora_layer(&self, site: &str) -> Option<LoraLayer<T>> {
        let get = |s: &str| self.params.get(&format!("{site}.{s}")).cloned();
        LoraLayer::new(get("w0")?, get("a")?, get("b")?).ok()
    }

    pub fn prefix_bank(&self) -> PrefixBank<T> {
        PrefixBank { embeddings: self.params.get("prefix").cloned(), width: self.config.model_dim }
    }

    pub fn optimizer(&self, config: AdamConfig) -> AdamState<T> {
        let sizes: Vec<usize> = self
            .params
            .trainable_ids()
            .iter()
            .map(|i| self.params.by_index(*i).value.numel())
            .collect();
        AdamState::new(config, &sizes)
    }

    /// Splits the image into `patch_size` tiles, projects each to `d` and
    /// adds the sinusoidal position code.
    pub fn patch_embed(&self, image: &GrayImage) -> Result<Tensor<T>, ModelError> {
        let mut b = Binder::new(&self.params, false);
        let v = self.patch_embed_graph(&mut b, image)?;
        Ok(b.graph.value(v).clone())
    }

    fn patch_embed_graph(&self, b: &mut Binder<'_, T>, image: &GrayImage) -> Result<Var, ModelError> {
        let p = self.config.patch_size;
        if image.height == 0 || image.width == 0 || image.height % p != 0 || image.width % p != 0 {
            return Err(ModelError::Shape(format!(
                "{}x{} image not divisible into {p}x{p} patches",
                image.height, image.width
            )));
        }
        let (gh, gw) = (image.height / p, image.width / p);
        let n = gh * gw;
        let mut flat = Vec::with_capacity(n * p * p);
        for pr in 0..gh {
            for pc in 0..gw {
                for i in 0..p {
                    for j in 0..p {
                        flat.push(T::c(image.get(pr * p + i, pc * p + j)));
                    }
                }
            }
        }
        let g = &mut b.graph;
        let x = g.constant(Tensor::matrix(n, p * p, flat)?)?;
        let w = b.param("vit.patch.w")?;
        let bias = b.param("vit.patch.b")?;
        let g = &mut b.graph;
        let proj = g.matmul(x, w)?;
        let proj = g.add_row(proj, bias)?;
        let pe = g.constant(position_encoding(n, self.config.model_dim))?;
        Ok(g.add(proj, pe)?)
    }

    /// Frozen visual backbone: patch embedding followed by the ViT blocks.
    pub fn encode_image(&self, image: &GrayImage) -> Result<Tensor<T>, ModelError> {
        Ok(self.encode_image_with_maps(image)?.0)
    }

    fn encode_image_with_maps(&self, image: &GrayImage) -> Result<(Tensor<T>, Vec<AttentionMap<T>>), ModelError> {
        let mut b = Binder::new(&self.params, false);
        let mut x = self.patch_embed_graph(&mut b, image)?;
        let mut maps = Vec::new();
        for l in 0..self.config.vit_layers {
            x = self.block(&mut b, &format!("vit.{l}"), x, None, None, false, Stage::Vit(l), &mut maps)?;
        }
        let out = b.graph.value(x).clone();
        let maps = maps
            .into_iter()
            .map(|(stage, head, v)| AttentionMap { stage, head, weights: b.graph.value(v).clone() })
            .collect();
        Ok((out, maps))
    }

    /// Compresses any number of image tokens to `num_queries` latent tokens.
    pub fn qformer_compress(&self, image_tokens: &Tensor<T>) -> Result<(Tensor<T>, Vec<AttentionMap<T>>), ModelError> {
        let mut b = Binder::new(&self.params, false);
        let img = b.graph.constant(image_tokens.clone())?;
        let mut maps = Vec::new();
        let out = self.qformer_graph(&mut b, img, &mut maps)?;
        let maps = maps
            .into_iter()
            .map(|(stage, head, v)| AttentionMap { stage, head, weights: b.graph.value(v).clone() })
            .collect();
        Ok((b.graph.value(out).clone(), maps))
    }

    fn qformer_graph(&self, b: &mut Binder<'_, T>, img: Var, maps: &mut Vec<(Stage, usize, Var)>) -> Result<Var, ModelError> {
        if b.graph.dims(img).1 != self.config.model_dim {
            return Err(ModelError::Shape(format!(
                "image tokens have width {}, model width is {}",
                b.graph.dims(img).1,
                self.config.model_dim
            )));
        }
        let queries = b.param("qformer.queries")?;
        Ok(self.block(b, "qformer", queries, Some(img), None, true, Stage::QFormer, maps)?)
    }

    fn project(&self, b: &mut Binder<'_, T>, x: Var, name: &str, lora: bool) -> TResult<Var> {
        if lora {
            let w0 = b.param(&format!("{name}.w0"))?;
            let a = b.param(&format!("{name}.a"))?;
            let bb = b.param(&format!("{name}.b"))?;
            lora_apply(&mut b.graph, x, w0, a, bb)
        } else {
            let w = b.param(name)?;
            b.graph.matmul(x, w)
        }
    }

    /// Post-norm transformer block; cross-attention when `kv` is given.
    #[allow(clippy::too_many_arguments)]
    fn block(
        &self,
        b: &mut Binder<'_, T>,
        pre: &str,
        xq: Var,
        kv: Option<Var>,
        mask: Option<Var>,
        lora: bool,
        stage: Stage,
        maps: &mut Vec<(Stage, usize, Var)>,
    ) -> TResult<Var> {
        let src = kv.unwrap_or(xq);
        let q = self.project(b, xq, &format!("{pre}.attn.q"), lora)?;
        let k = self.project(b, src, &format!("{pre}.attn.k"), lora)?;
        let v = self.project(b, src, &format!("{pre}.attn.v"), lora)?;
        let dk = self.config.head_dim();
        let mut heads = Vec::with_capacity(self.config.num_heads);
        for h in 0..self.config.num_heads {
            let g = &mut b.graph;
            let qh = g.slice_cols(q, h * dk, dk)?;
            let kh = g.slice_cols(k, h * dk, dk)?;
            let vh = g.slice_cols(v, h * dk, dk)?;
            let (out, alpha) = attention(g, qh, kh, vh, mask)?;
            maps.push((stage, h, alpha));
            heads.push(out);
        }
        let cat = b.graph.concat_cols(&heads)?;
        let wo = b.param(&format!("{pre}.attn.o"))?;
        let (g1, b1) = (b.param(&format!("{pre}.ln1.g"))?, b.param(&format!("{pre}.ln1.b"))?);
        let (w1, bias1) = (b.param(&format!("{pre}.ffn.w1"))?, b.param(&format!("{pre}.ffn.b1"))?);
        let (w2, bias2) = (b.param(&format!("{pre}.ffn.w2"))?, b.param(&format!("{pre}.ffn.b2"))?);
        let (g2, b2) = (b.param(&format!("{pre}.ln2.g"))?, b.param(&format!("{pre}.ln2.b"))?);
        let g = &mut b.graph;
        let attn = g.matmul(cat, wo)?;
        let h1 = g.add(xq, attn)?;
        let h1 = g.layer_norm(h1, g1, b1)?;
        let f = g.matmul(h1, w1)?;
        let f = g.add_row(f, bias1)?;
        let f = g.gelu(f)?;
        let f = g.matmul(f, w2)?;
        let f = g.add_row(f, bias2)?;
        let h2 = g.add(h1, f)?;
        g.layer_norm(h2, g2, b2)
    }

    fn check_tokens(&self, ids: &[usize]) -> Result<(), ModelError> {
        match ids.iter().find(|i| **i >= self.config.vocab_size) {
            Some(id) => Err(ModelError::Vocabulary { id: *id, size: self.config.vocab_size }),
            None => Ok(()),
        }
    }

    fn forward_graph(
        &self,
        b: &mut Binder<'_, T>,
        features: &Tensor<T>,
        question: &[usize],
        rationale_in: &[usize],
    ) -> Result<ForwardVars, ModelError> {
        if question.is_empty() {
            return Err(ModelError::Shape("question must contain at least one token".into()));
        }
        self.check_tokens(question)?;
        self.check_tokens(rationale_in)?;
        let d = self.config.model_dim;
        let mut maps = Vec::new();
        let img = b.graph.constant(features.clone())?;
        let latent = self.qformer_graph(b, img, &mut maps)?;
        let nq = b.graph.dims(latent).0;

        let embed = b.param("dec.embed")?;
        let mut text_ids = question.to_vec();
        text_ids.extend_from_slice(rationale_in);
        let g = &mut b.graph;
        let text = g.gather_rows(embed, &text_ids)?;
        let pe = g.constant(position_encoding(text_ids.len(), d))?;
        let text = g.add(text, pe)?;
        let body = g.concat_rows(&[latent, text])?;
        let prefix = if self.config.prefix_len > 0 { Some(b.param("prefix")?) } else { None };
        let seq = prefix_concat(&mut b.graph, prefix, body)?;

        let m = self.config.prefix_len;
        let total = b.graph.dims(seq).0;
        let ctx = m + nq + question.len();
        let mut mask = vec![T::zero(); total * total];
        for i in 0..total {
            for j in 0..total {
                if j >= ctx && j > i {
                    mask[i * total + j] = T::c(MASKED);
                }
            }
        }
        let mask = b.graph.constant(Tensor::matrix(total, total, mask)?)?;

        let mut h = seq;
        for l in 0..self.config.decoder_layers {
            let lora = l + 1 == self.config.decoder_layers;
            h = self.block(b, &format!("dec.{l}"), h, None, Some(mask), lora, Stage::Decoder(l), &mut maps)?;
        }

        let (gw, gb) = (b.param("gate.w")?, b.param("gate.b")?);
        let (hw, hb) = (b.param("head.w")?, b.param("head.b")?);
        let lm = b.param("lm_head")?;
        let g = &mut b.graph;
        let vis = g.slice_rows(h, m, nq)?;
        let visual = g.mean_rows(vis)?;
        let txt = g.slice_rows(h, m + nq, question.len())?;
        let textual = g.mean_rows(txt)?;
        let fused = gated_fusion(g, visual, textual, gw, gb)?;
        let z = g.matmul(fused.output, hw)?;
        let z = g.add_row(z, hb)?;
        let unit = g.sigmoid(z)?;
        let heads = &self.config.score_heads;
        let spans = Tensor::matrix(1, heads.len(), heads.iter().map(|s| T::c(s.hi - s.lo)).collect())?;
        let lows = Tensor::matrix(1, heads.len(), heads.iter().map(|s| T::c(s.lo)).collect())?;
        let spans = g.constant(spans)?;
        let lows = g.constant(lows)?;
        let scaled = g.mul(unit, spans)?;
        let scores = g.add(scaled, lows)?;

        let logits = if rationale_in.is_empty() {
            None
        } else {
            let states = g.slice_rows(h, ctx, rationale_in.len())?;
            Some(g.matmul(states, lm)?)
        };
        Ok(ForwardVars { scores, logits, gate: fused.gate, maps })
    }

    /// Scores and greedy rationale for one image/question pair.
    pub fn forward(&self, image: &GrayImage, question: &[usize]) -> Result<DualOutput<T>, ModelError> {
        self.check_tokens(question)?;
        let (features, vit_maps) = self.encode_image_with_maps(image)?;
        let p = self.config.patch_size;
        let grid = (image.height / p, image.width / p);
        self.forward_features(&features, question, grid, vit_maps)
    }

    pub fn forward_features(
        &self,
        features: &Tensor<T>,
        question: &[usize],
        patch_grid: (usize, usize),
        vit_maps: Vec<AttentionMap<T>>,
    ) -> Result<DualOutput<T>, ModelError> {
        let mut generated: Vec<usize> = Vec::new();
        loop {
            let mut rin = vec![BOS];
            rin.extend_from_slice(&generated);
            let mut b = Binder::new(&self.params, false);
            let fv = self.forward_graph(&mut b, features, question, &rin)?;
            let logits = b.graph.value(fv.logits.expect("rationale input is nonempty"));
            let last = logits.row(logits.rows() - 1);
            let next = argmax(last);
            let done = next == EOS || generated.len() + 1 >= self.config.max_rationale_len;
            if next != EOS {
                generated.push(next);
            }
            if done {
                let unit = b.graph.value(fv.scores);
                let scores = self
                    .config
                    .score_heads
                    .iter()
                    .enumerate()
                    .map(|(i, h)| (h.name.clone(), unit.data()[i].f64().clamp(h.lo, h.hi)))
                    .collect();
                let mut attention_maps = vit_maps;
                attention_maps.extend(
                    fv.maps
                        .into_iter()
                        .map(|(stage, head, v)| AttentionMap { stage, head, weights: b.graph.value(v).clone() }),
                );
                return Ok(DualOutput {
                    scores,
                    rationale_tokens: generated,
                    attention_maps,
                    gate: b.graph.value(fv.gate).data().to_vec(),
                    patch_grid,
                });
            }
        }
    }

    /// Builds the weighted training loss of `batch` on `b`'s graph.
    fn loss_graph(&self, b: &mut Binder<'_, T>, batch: &[Example<T>]) -> Result<Var, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Shape("empty batch".into()));
        }
        let mut terms = Vec::with_capacity(batch.len());
        let limit = self.config.max_rationale_len.saturating_sub(1);
        for ex in batch {
            let rationale = &ex.rationale[..ex.rationale.len().min(limit)];
            let mut rin = vec![BOS];
            rin.extend_from_slice(rationale);
            let mut targets = rationale.to_vec();
            targets.push(EOS);
            let fv = self.forward_graph(b, &ex.features, &ex.question, &rin)?;
            let g = &mut b.graph;
            let ce = g.cross_entropy(fv.logits.expect("rationale input is nonempty"), &targets)?;
            let mut term = g.scale(ce, T::c(self.config.rationale_weight))?;
            if let Some((head, target)) = ex.target {
                if head >= self.config.score_heads.len() {
                    return Err(ModelError::Index(format!("score head {head} does not exist")));
                }
                let pred = g.slice_cols(fv.scores, head, 1)?;
                let diff = g.add_scalar(pred, T::c(-target))?;
                let sq = g.mul(diff, diff)?;
                let sq = g.sum(sq)?;
                let weighted = g.scale(sq, T::c(self.config.score_weight))?;
                term = g.add(term, weighted)?;
            }
            terms.push(term);
        }
        let g = &mut b.graph;
        let all = g.concat_rows(&terms)?;
        Ok(g.mean(all)?)
    }

    /// Loss of `batch` without updating anything.
    pub fn loss(&self, batch: &[Example<T>]) -> Result<f64, ModelError> {
        let mut b = Binder::new(&self.params, false);
        let l = self.loss_graph(&mut b, batch)?;
        Ok(b.graph.value(l).data()[0].f64())
    }

    /// Loss and gradient of every trainable parameter (store order).
    pub fn loss_and_grads(&self, batch: &[Example<T>]) -> Result<(f64, Vec<(String, Vec<T>)>), ModelError> {
        let mut b = Binder::new(&self.params, true);
        let l = self.loss_graph(&mut b, batch)?;
        let loss = b.graph.value(l).data()[0].f64();
        if !loss.is_finite() {
            return Err(ModelError::Tensor(TensorError::Numeric { op: "loss" }));
        }
        b.graph.backward(l)?;
        let bound: BTreeMap<usize, Var> = b.bound_trainables().into_iter().collect();
        let grads = self
            .params
            .trainable_ids()
            .into_iter()
            .map(|id| {
                let p = self.params.by_index(id);
                let grad = bound
                    .get(&id)
                    .and_then(|v| b.graph.grad(*v).map(<[T]>::to_vec))
                    .unwrap_or_else(|| vec![T::zero(); p.value.numel()]);
                (p.name.clone(), grad)
            })
            .collect();
        Ok((loss, grads))
    }

    /// One optimizer step on `batch`; returns the loss before the update.
    /// Only trainable parameters are touched.
    pub fn train_step(&mut self, batch: &[Example<T>], opt: &mut AdamState<T>) -> Result<f64, ModelError> {
        let (loss, grads) = self.loss_and_grads(batch)?;
        let ids = self.params.trainable_ids();
        let grad_refs: Vec<&[T]> = grads.iter().map(|(_, g)| g.as_slice()).collect();
        let mut targets: Vec<&mut Tensor<T>> = self
            .params
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| ids.contains(i))
            .map(|(_, p)| &mut p.value)
            .collect();
        adam_step(&mut targets, &grad_refs, opt)?;
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::Tensor(TensorError::Numeric { op: "adam_step" }));
        }
        Ok(loss)
    }

    /// Prepares an [`Example`] from raw inputs.
    pub fn example(
        &self,
        image: &GrayImage,
        question: &str,
        rationale: &str,
        target: Option<(&str, f64)>,
    ) -> Result<Example<T>, ModelError> {
        let target = target.and_then(|(dim, score)| self.head_index(dim).map(|h| (h, score)));
        Ok(Example {
            features: self.encode_image(image)?,
            question: self.vocab.encode(question),
            rationale: self.vocab.encode(rationale),
            target,
        })
    }
}

fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Patch-keyed attention (ViT blocks, then the Q-Former) averaged over query
/// rows and laid out on the image's patch grid. The grid sums to 1.
pub fn attention_heatmap<T: Scalar>(output: &DualOutput<T>, layer: usize, head: usize) -> Result<Vec<Vec<f64>>, ModelError> {
    let mut stages: Vec<Stage> = Vec::new();
    for m in &output.attention_maps {
        if matches!(m.stage, Stage::Vit(_) | Stage::QFormer) && !stages.contains(&m.stage) {
            stages.push(m.stage);
        }
    }
    let stage = *stages
        .get(layer)
        .ok_or_else(|| ModelError::Index(format!("layer {layer} of {} patch-attending layers", stages.len())))?;
    let map = output
        .attention_maps
        .iter()
        .find(|m| m.stage == stage && m.head == head)
        .ok_or_else(|| ModelError::Index(format!("head {head} not recorded for {stage:?}")))?;
    let (rows, cols) = map.weights.dims2();
    let (gh, gw) = output.patch_grid;
    if cols != gh * gw {
        return Err(ModelError::Shape(format!("{cols} keys for a {gh}x{gw} patch grid")));
    }
    let mut mass: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| map.weights.at(i, j).f64().max(0.0)).sum()).collect();
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    Ok(mass.chunks(gw).map(<[f64]>::to_vec).collect())
}
