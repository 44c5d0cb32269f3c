//! Reserve-buffer curriculum: n-gram drift detection and swaps.

use std::collections::{BTreeMap, BTreeSet};

use msef_core::rng::Rng as CoreRng;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::records::{QATriplet, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Overlap below which a generation counts as off-reference.
    pub tau: f64,
    pub ngram: usize,
    /// Share of each training batch replaced by reserve pairs.
    pub periodic_fraction: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self { tau: 0.2, ngram: 2, periodic_fraction: 0.1 }
    }
}

fn ngrams(text: &str, n: usize) -> BTreeSet<Vec<String>> {
    let words: Vec<String> = text.to_lowercase().split_whitespace().map(str::to_string).collect();
    if n == 0 || words.len() < n {
        return BTreeSet::new();
    }
    words.windows(n).map(<[String]>::to_vec).collect()
}

/// Largest Jaccard similarity of word n-gram sets between `generated` and
/// any reference. Two empty sets count as identical; one empty set as
/// disjoint. No references gives 0.
pub fn ngram_overlap(generated: &str, references: &[&str], n: usize) -> f64 {
    let g = ngrams(generated, n);
    references
        .iter()
        .map(|r| {
            let r = ngrams(r, n);
            match (g.is_empty(), r.is_empty()) {
                (true, true) => 1.0,
                (true, false) | (false, true) => 0.0,
                _ => g.intersection(&r).count() as f64 / g.union(&r).count() as f64,
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapKind {
    Promotion,
    EmptyReserve,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapLog {
    pub epoch: usize,
    pub kind: SwapKind,
    pub image_id: String,
    pub overlap: Option<f64>,
    pub promoted: Option<String>,
    pub demoted: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refresh {
    pub active: Vec<QATriplet>,
    pub reserve: Vec<QATriplet>,
    pub log: Vec<SwapLog>,
}

fn label(t: &QATriplet) -> String {
    format!("{}/{}: {}", t.image_id, t.dimension, t.answer_text)
}

/// For every image whose generation falls below `tau` against all of its
/// active references, the oldest reserve pair for that image is promoted to
/// the end of the active list and the image's least recently promoted active
/// pair moves to the end of the reserve. Per-image counts are conserved.
pub fn curriculum_refresh(
    generations: &BTreeMap<String, String>,
    active: &[QATriplet],
    reserve: &[QATriplet],
    cfg: &CurriculumConfig,
    epoch: usize,
) -> Refresh {
    let mut active = active.to_vec();
    let mut reserve = reserve.to_vec();
    let mut log = Vec::new();
    for (image_id, text) in generations {
        let refs: Vec<&str> = active.iter().filter(|t| &t.image_id == image_id).map(|t| t.answer_text.as_str()).collect();
        if refs.is_empty() {
            continue;
        }
        let overlap = ngram_overlap(text, &refs, cfg.ngram);
        if overlap >= cfg.tau {
            continue;
        }
        let Some(r) = reserve.iter().position(|t| &t.image_id == image_id) else {
            log.push(SwapLog {
                epoch,
                kind: SwapKind::EmptyReserve,
                image_id: image_id.clone(),
                overlap: Some(overlap),
                promoted: None,
                demoted: None,
            });
            continue;
        };
        let a = active.iter().position(|t| &t.image_id == image_id).expect("image has active references");
        let mut promoted = reserve.remove(r);
        promoted.split = Split::Train;
        let mut demoted = active.remove(a);
        demoted.split = Split::Reserve;
        log.push(SwapLog {
            epoch,
            kind: SwapKind::Promotion,
            image_id: image_id.clone(),
            overlap: Some(overlap),
            promoted: Some(label(&promoted)),
            demoted: Some(label(&demoted)),
        });
        active.push(promoted);
        reserve.push(demoted);
    }
    Refresh { active, reserve, log }
}

/// Replaces `round(fraction × batch)` batch entries, at positions drawn
/// without replacement, with reserve pairs drawn uniformly.
pub fn periodic_replacement(
    batch: &[QATriplet],
    reserve: &[QATriplet],
    fraction: f64,
    rng: &mut CoreRng,
    epoch: usize,
) -> (Vec<QATriplet>, Vec<SwapLog>) {
    let mut out = batch.to_vec();
    let k = ((fraction * batch.len() as f64).round() as usize).min(batch.len());
    if k == 0 || reserve.is_empty() {
        return (out, Vec::new());
    }
    let mut positions = sample(rng, batch.len(), k).into_vec();
    positions.sort_unstable();
    let mut log = Vec::with_capacity(k);
    for p in positions {
        let mut incoming = reserve[rng.random_range(0..reserve.len())].clone();
        incoming.split = Split::Train;
        log.push(SwapLog {
            epoch,
            kind: SwapKind::Periodic,
            image_id: incoming.image_id.clone(),
            overlap: None,
            promoted: Some(label(&incoming)),
            demoted: Some(label(&out[p])),
        });
        out[p] = incoming;
    }
    (out, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use msef_core::rng::seeded;

    fn t(image: &str, text: &str, split: Split) -> QATriplet {
        QATriplet {
            image_id: image.into(),
            question: "how green is this street".into(),
            answer_score: Some(3.0),
            answer_text: text.into(),
            dimension: "greening_level".into(),
            split,
            augmented: false,
        }
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(ngram_overlap("wide clean street", &["wide clean street"], 2), 1.0);
        assert_eq!(ngram_overlap("many trees here", &["busy road lane"], 2), 0.0);
        let v = ngram_overlap("clean wide sidewalk", &["wide sidewalk here"], 2);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ngram_overlap("x", &["y"], 2), 1.0);
        assert_eq!(ngram_overlap("x", &["y z"], 2), 0.0);
        assert_eq!(ngram_overlap("a b", &["c d", "a b"], 2), 1.0);
    }

    #[test]
    fn on_reference_generations_change_nothing() {
        let active = vec![t("a", "many trees here", Split::Train), t("b", "few trees here", Split::Train)];
        let reserve = vec![t("a", "green street with trees", Split::Reserve)];
        let gens: BTreeMap<String, String> =
            [("a".to_string(), "many trees here".to_string()), ("b".to_string(), "few trees here".to_string())].into();
        let r = curriculum_refresh(&gens, &active, &reserve, &CurriculumConfig { periodic_fraction: 0.0, ..Default::default() }, 0);
        assert_eq!(r.active, active);
        assert_eq!(r.reserve, reserve);
        assert!(r.log.is_empty());
    }

    #[test]
    fn off_reference_generation_swaps_once() {
        let active = vec![t("a", "many trees here", Split::Train), t("b", "few trees here", Split::Train)];
        let reserve = vec![t("a", "green street with trees", Split::Reserve)];
        let gens: BTreeMap<String, String> =
            [("a".to_string(), "busy road lane".to_string()), ("b".to_string(), "few trees here".to_string())].into();
        let r = curriculum_refresh(&gens, &active, &reserve, &CurriculumConfig::default(), 1);
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.log[0].kind, SwapKind::Promotion);
        assert_eq!(r.active.len(), 2);
        assert_eq!(r.reserve.len(), 1);
        assert_eq!(r.active[1].answer_text, "green street with trees");
        assert_eq!(r.reserve[0].answer_text, "many trees here");
    }

    #[test]
    fn empty_reserve_only_logs() {
        let active = vec![t("a", "many trees here", Split::Train)];
        let gens: BTreeMap<String, String> = [("a".to_string(), "busy road lane".to_string())].into();
        let r = curriculum_refresh(&gens, &active, &[], &CurriculumConfig::default(), 0);
        assert_eq!(r.active, active);
        assert_eq!(r.log[0].kind, SwapKind::EmptyReserve);
    }

    #[test]
    fn periodic_fraction_is_exact_and_reproducible() {
        let batch: Vec<QATriplet> = (0..100).map(|i| t(&format!("i{i}"), "many trees here", Split::Train)).collect();
        let reserve = vec![t("r", "green street", Split::Reserve), t("s", "open sky", Split::Reserve)];
        let (a, log) = periodic_replacement(&batch, &reserve, 0.1, &mut seeded(4), 0);
        assert_eq!(log.len(), 10);
        let (b, _) = periodic_replacement(&batch, &reserve, 0.1, &mut seeded(4), 0);
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|q| q.image_id == "r" || q.image_id == "s").count(), 10);
    }
}
