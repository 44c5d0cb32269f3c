//! Per-respondent Likert standardization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::records::RatingRecord;

pub const LIKERT_LO: f64 = 1.0;
pub const LIKERT_HI: f64 = 5.0;
pub const LIKERT_MID: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when there were too few ratings to standardize; values are then
    /// passed through unchanged.
    pub passed_through: bool,
}

/// `clip(3 + (x − mean)/sd, 1, 5)` with the population sd of the
/// respondent's ratings. A respondent with sd 0 maps to 3 everywhere.
pub fn normalize_likert(scores: &[f64]) -> Normalized {
    if scores.len() < 2 {
        return Normalized { values: scores.to_vec(), passed_through: true };
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let values = scores
        .iter()
        .map(|x| if sd > 0.0 { (LIKERT_MID + (x - mean) / sd).clamp(LIKERT_LO, LIKERT_HI) } else { LIKERT_MID })
        .collect();
    Normalized { values, passed_through: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRating {
    pub respondent_id: String,
    pub image_id: String,
    pub dimension: String,
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeLog {
    pub respondent_id: String,
    pub ratings: usize,
    pub skipped: usize,
    pub passed_through: bool,
}

/// Standardizes every respondent across all of their non-skipped ratings.
/// Output is ordered by respondent, then by input order.
pub fn normalize_ratings(records: &[RatingRecord]) -> (Vec<NormalizedRating>, Vec<NormalizeLog>) {
    let mut by_respondent: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        by_respondent.entry(r.respondent_id.as_str()).or_default().push(r);
    }
    let mut out = Vec::new();
    let mut log = Vec::new();
    for (respondent, rs) in by_respondent {
        let used: Vec<&RatingRecord> = rs.iter().copied().filter(|r| !r.skipped && r.score.is_some()).collect();
        let raw: Vec<f64> = used.iter().map(|r| f64::from(r.score.expect("filtered"))).collect();
        let norm = normalize_likert(&raw);
        log.push(NormalizeLog {
            respondent_id: respondent.to_string(),
            ratings: used.len(),
            skipped: rs.len() - used.len(),
            passed_through: norm.passed_through,
        });
        for ((r, x), z) in used.iter().zip(&raw).zip(&norm.values) {
            out.push(NormalizedRating {
                respondent_id: respondent.to_string(),
                image_id: r.image_id.clone(),
                dimension: r.dimension.clone(),
                raw: *x,
                normalized: *z,
            });
        }
    }
    (out, log)
}

/// Mean rating per `(image, dimension)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub image_id: String,
    pub dimension: String,
    pub raw_mean: f64,
    pub normalized_mean: f64,
    pub n: usize,
}

pub fn aggregate_scores(ratings: &[NormalizedRating]) -> Vec<HumanScore> {
    let mut acc: BTreeMap<(&str, &str), (f64, f64, usize)> = BTreeMap::new();
    for r in ratings {
        let e = acc.entry((r.image_id.as_str(), r.dimension.as_str())).or_insert((0.0, 0.0, 0));
        e.0 += r.raw;
        e.1 += r.normalized;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|((image_id, dimension), (raw, norm, n))| HumanScore {
            image_id: image_id.to_string(),
            dimension: dimension.to_string(),
            raw_mean: raw / n as f64,
            normalized_mean: norm / n as f64,
            n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ratings_map_to_midpoint() {
        assert_eq!(normalize_likert(&[3.0, 3.0, 3.0]).values, vec![3.0; 3]);
        assert_eq!(normalize_likert(&[5.0, 5.0]).values, vec![3.0; 2]);
    }

    #[test]
    fn population_sd_rescale() {
        let v = normalize_likert(&[1.0, 3.0, 5.0]).values;
        let k = 2.0 / (8.0f64 / 3.0).sqrt();
        assert!((v[0] - (3.0 - k)).abs() < 1e-12);
        assert_eq!(v[1], 3.0);
        assert!((v[2] - (3.0 + k)).abs() < 1e-12);
        assert!((v[0] - 1.775).abs() < 1e-3 && (v[2] - 4.225).abs() < 1e-3);
    }

    #[test]
    fn single_rating_passes_through() {
        let n = normalize_likert(&[4.0]);
        assert!(n.passed_through);
        assert_eq!(n.values, vec![4.0]);
    }

    #[test]
    fn outputs_are_clipped() {
        let v = normalize_likert(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 5.0]).values;
        assert!(v.iter().all(|x| (1.0..=5.0).contains(x)));
        assert_eq!(v[9], 5.0);
    }
}
