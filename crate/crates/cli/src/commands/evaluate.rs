use std::collections::{BTreeMap, BTreeSet};

use msef_data::io::write_csv;
use msef_data::synth::text::question;
use msef_data::{DimensionRegistry, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curate::{read_split, SPLIT_FILE};
use super::ensure_dir;
use super::train::{load_checkpoint, load_images, load_triplets};
use crate::config::{Layout, RunConfig};
use crate::error::{CliError, Result};

/// One averaged prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub image_id: String,
    pub dimension: String,
    pub score: f64,
    pub repetition_sd: f64,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub images: usize,
    pub rows: usize,
    pub max_repetition_sd: f64,
}

/// Scores every validation image on every dimension, averaging
/// `repetitions` greedy passes.
pub fn run(config: &RunConfig, layout: &Layout) -> Result<EvaluateSummary> {
    let reps = config.evaluate.repetitions;
    if reps == 0 {
        return Err(CliError::user("evaluate.repetitions must be at least 1"));
    }
    let (model, _) = load_checkpoint(&layout.checkpoint())?.restore::<f64>()?;
    let registry = DimensionRegistry::default();
    let images = load_images(&layout.curated)?;
    let triplets = load_triplets(&layout.curated, &registry)?;
    let split = read_split(&layout.curated.join(SPLIT_FILE))?;
    let val: BTreeSet<&str> = split.iter().filter(|r| r.split == Split::Val).map(|r| r.community_id.as_str()).collect();
    let mut ids: Vec<&String> = images.values().filter(|i| val.contains(i.community_id.as_str())).map(|i| &i.image_id).collect();
    if let Some(cap) = config.evaluate.max_images {
        ids.truncate(cap);
    }
    if ids.is_empty() {
        return Err(CliError::user("the validation split is empty; nothing to evaluate"));
    }
    let mut questions: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for t in &triplets {
        questions.entry((t.image_id.as_str(), t.dimension.as_str())).or_insert(t.question.as_str());
    }

    let per_image: Vec<Result<Vec<PredictionRow>>> = ids
        .par_iter()
        .map(|id| {
            let record = &images[id.as_str()];
            let image = record.image();
            let features = model.encode_image(&image)?;
            let p = model.config.patch_size;
            let grid = (image.height / p, image.width / p);
            let mut rows = Vec::with_capacity(registry.len());
            for dim in registry.keys() {
                let q = questions.get(&(id.as_str(), dim)).copied().unwrap_or_else(|| question(dim));
                let tokens = model.vocab.encode(q);
                let mut scores = Vec::with_capacity(reps);
                let mut rationale = String::new();
                for k in 0..reps {
                    let out = model.forward_features(&features, &tokens, grid, Vec::new())?;
                    scores.push(out.scores[dim]);
                    if k == 0 {
                        rationale = model.vocab.decode(&out.rationale_tokens);
                    }
                }
                let mean = scores.iter().sum::<f64>() / reps as f64;
                let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / reps as f64).sqrt();
                rows.push(PredictionRow { image_id: id.to_string(), dimension: dim.to_string(), score: mean, repetition_sd: sd, rationale });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::with_capacity(ids.len() * registry.len());
    for r in per_image {
        rows.extend(r?);
    }
    if let Some(parent) = layout.predictions.parent() {
        ensure_dir(parent)?;
    }
    write_csv(&layout.predictions, &rows)?;
    Ok(EvaluateSummary {
        images: ids.len(),
        rows: rows.len(),
        max_repetition_sd: rows.iter().map(|r| r.repetition_sd).fold(0.0, f64::max),
    })
}
