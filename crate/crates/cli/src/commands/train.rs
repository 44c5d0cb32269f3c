use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use msef_core::model::{Checkpoint, Example, ModelError};
use msef_core::rng;
use msef_core::{Model64, Tensor64, TensorError};
use msef_data::curriculum::{curriculum_refresh, periodic_replacement, SwapLog};
use msef_data::io::{read_csv, read_images, read_jsonl, read_triplets, write_csv, write_jsonl};
use msef_data::synth::corpus::{IMAGES_FILE, TRIPLETS_FILE};
use msef_data::validate::Mode;
use msef_data::{DimensionRegistry, ImageRecord, QATriplet, Split};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, require, write_text};
use crate::config::{Layout, RunConfig};
use crate::error::{CliError, Result};

pub const LOSS_FILE: &str = "loss.csv";
pub const SWAPS_FILE: &str = "swaps.jsonl";
pub const STATE_FILE: &str = "state.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub step: u64,
    pub epoch: usize,
    pub loss: f64,
}

/// Curriculum state saved alongside the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub step: u64,
    pub active: Vec<QATriplet>,
    pub reserve: Vec<QATriplet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub start_step: u64,
    pub end_step: u64,
    pub first_loss: Option<f64>,
    pub last_loss: Option<f64>,
    pub promotions: usize,
    pub trainable_fraction: f64,
    pub frozen_before: String,
    pub frozen_after: String,
}

pub(crate) fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    require(path, "checkpoint")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::user(format!("cannot read {}: {e}", path.display())))?;
    Ok(Checkpoint::from_json(&text)?)
}

pub(crate) fn load_triplets(dir: &Path, registry: &DimensionRegistry) -> Result<Vec<QATriplet>> {
    let path = dir.join(TRIPLETS_FILE);
    require(&path, "curated triplets")?;
    let file = read_triplets(&path, registry, Mode::Strict)?;
    if let Some(e) = file.errors.first() {
        return Err(CliError::user(format!("curated triplets are invalid: {e}")));
    }
    Ok(file.parsed.into_iter().map(|(_, p)| p.triplet).collect())
}

pub(crate) fn load_images(dir: &Path) -> Result<BTreeMap<String, ImageRecord>> {
    let path = dir.join(IMAGES_FILE);
    require(&path, "curated images")?;
    Ok(read_images(&path)?.into_iter().map(|i| (i.image_id.clone(), i)).collect())
}

struct FeatureCache<'a> {
    model: &'a Model64,
    images: &'a BTreeMap<String, ImageRecord>,
    cache: BTreeMap<String, Tensor64>,
}

impl FeatureCache<'_> {
    fn get(&mut self, image_id: &str) -> Result<Tensor64> {
        if let Some(t) = self.cache.get(image_id) {
            return Ok(t.clone());
        }
        let record = self.images.get(image_id).ok_or_else(|| CliError::user(format!("triplet refers to missing image {image_id}")))?;
        let t = self.model.encode_image(&record.image())?;
        self.cache.insert(image_id.to_string(), t.clone());
        Ok(t)
    }
}

fn non_finite(epoch: usize, step: u64) -> CliError {
    CliError::internal(format!("non-finite loss at epoch {epoch}, step {step}; training aborted"))
}

fn save(layout: &Layout, model: &Model64, opt: &msef_core::AdamState64, state: &TrainState, rows: &[LossRow], swaps: &[SwapLog]) -> Result<()> {
    let ckpt = Checkpoint::capture(model, state.step, Some(opt));
    write_text(&layout.checkpoint(), &ckpt.to_json())?;
    write_text(&layout.train.join(STATE_FILE), &serde_json::to_string(state)?)?;
    write_csv(&layout.train.join(LOSS_FILE), rows)?;
    write_jsonl(&layout.train.join(SWAPS_FILE), swaps)?;
    Ok(())
}

/// Trains the adapters on the curated training split, refreshing the
/// curriculum at every epoch boundary. Each step draws its batch from its
/// own seeded stream, so a resumed run repeats an uninterrupted one.
pub fn run(config: &RunConfig, layout: &Layout, resume: bool) -> Result<TrainSummary> {
    let registry = DimensionRegistry::default();
    let triplets = load_triplets(&layout.curated, &registry)?;
    let images = load_images(&layout.curated)?;
    let tc = &config.train;
    if tc.batch_size == 0 || tc.steps_per_epoch == 0 {
        return Err(CliError::user("batch_size and steps_per_epoch must be positive"));
    }
    ensure_dir(&layout.train)?;
    let adapter = config.adapter(&registry);

    let (mut model, mut opt, mut state, mut rows, mut swaps) = if resume {
        let ckpt = load_checkpoint(&layout.checkpoint())?;
        if ckpt.config != adapter {
            return Err(CliError::user("checkpoint was trained with a different model config"));
        }
        let (model, opt) = ckpt.restore::<f64>()?;
        let opt = opt.ok_or_else(|| CliError::user("checkpoint has no optimizer state to resume from"))?;
        let state_path = layout.train.join(STATE_FILE);
        require(&state_path, "training state")?;
        let text = std::fs::read_to_string(&state_path).map_err(|e| CliError::user(e.to_string()))?;
        let state: TrainState = serde_json::from_str(&text).map_err(|e| CliError::user(format!("bad training state: {e}")))?;
        if state.step != ckpt.step {
            return Err(CliError::user("training state and checkpoint disagree on the step"));
        }
        let mut rows: Vec<LossRow> = read_csv(&layout.train.join(LOSS_FILE))?;
        rows.retain(|r| r.step < state.step);
        let swaps: Vec<SwapLog> = read_jsonl(&layout.train.join(SWAPS_FILE))?;
        (model, opt, state, rows, swaps)
    } else {
        let model = Model64::new(adapter)?;
        let opt = model.optimizer(tc.adam());
        let active: Vec<QATriplet> = triplets.iter().filter(|t| t.split == Split::Train).cloned().collect();
        let reserve: Vec<QATriplet> = triplets.iter().filter(|t| t.split == Split::Reserve).cloned().collect();
        (model, opt, TrainState { step: 0, active, reserve }, Vec::new(), Vec::new())
    };
    if state.active.is_empty() {
        return Err(CliError::user("no training triplets in the curated corpus"));
    }

    let frozen_before = model.frozen_hash();
    let start_step = state.step;
    let total = (tc.epochs * tc.steps_per_epoch) as u64;
    let curriculum = config.curation.curriculum();
    let mut first_loss = None;
    let encoder = model.clone();
    let mut frozen_features = FeatureCache { model: &encoder, images: &images, cache: BTreeMap::new() };

    while state.step < total {
        let step = state.step;
        let epoch = (step / tc.steps_per_epoch as u64) as usize;
        let mut r = rng::stream(config.seed, rng::key_stream(&format!("train/{step}")));
        let picks = sample(&mut r, state.active.len(), tc.batch_size.min(state.active.len()));
        let batch: Vec<QATriplet> = picks.into_iter().map(|i| state.active[i].clone()).collect();
        let (batch, periodic) = periodic_replacement(&batch, &state.reserve, curriculum.periodic_fraction, &mut r, epoch);
        swaps.extend(periodic);
        let mut examples = Vec::with_capacity(batch.len());
        for t in &batch {
            examples.push(Example {
                features: frozen_features.get(&t.image_id)?,
                question: model.vocab.encode(&t.question),
                rationale: model.vocab.encode(&t.answer_text),
                target: t.answer_score.and_then(|s| model.head_index(&t.dimension).map(|h| (h, s))),
            });
        }
        let loss = match model.train_step(&examples, &mut opt) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(ModelError::Tensor(TensorError::Numeric { .. })) => return Err(non_finite(epoch, step)),
            Err(e) => return Err(e.into()),
        };
        first_loss.get_or_insert(loss);
        rows.push(LossRow { step, epoch, loss });
        state.step += 1;

        if state.step % tc.steps_per_epoch as u64 == 0 {
            let ids: Vec<String> = state.active.iter().map(|t| t.image_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
            let mut r = rng::stream(config.seed, rng::key_stream(&format!("refresh/{epoch}")));
            let chosen = sample(&mut r, ids.len(), tc.refresh_images.min(ids.len())).into_vec();
            let mut generations = BTreeMap::new();
            for i in chosen {
                let id = &ids[i];
                let t = state.active.iter().find(|t| &t.image_id == id).expect("id drawn from the active set");
                let record = &images[id];
                let p = model.config.patch_size;
                let out = model.forward_features(
                    &frozen_features.get(id)?,
                    &model.vocab.encode(&t.question),
                    (record.height / p, record.width / p),
                    Vec::new(),
                )?;
                generations.insert(id.clone(), model.vocab.decode(&out.rationale_tokens));
            }
            let refresh = curriculum_refresh(&generations, &state.active, &state.reserve, &curriculum, epoch);
            state.active = refresh.active;
            state.reserve = refresh.reserve;
            swaps.extend(refresh.log);
            save(layout, &model, &opt, &state, &rows, &swaps)?;
        }
    }
    save(layout, &model, &opt, &state, &rows, &swaps)?;
    let frozen_after = model.frozen_hash();
    if frozen_after != frozen_before {
        return Err(CliError::internal("frozen weights changed during training"));
    }
    Ok(TrainSummary {
        start_step,
        end_step: state.step,
        first_loss,
        last_loss: rows.last().map(|r| r.loss),
        promotions: swaps.iter().filter(|s| s.kind == msef_data::curriculum::SwapKind::Promotion).count(),
        trainable_fraction: model.trainable_fraction(),
        frozen_before,
        frozen_after,
    })
}
