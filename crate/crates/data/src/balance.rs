//! Dimension and sentiment balancing by flagged duplication.

use msef_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::records::{QATriplet, Split};
use crate::registry::{Dimension, DimensionRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceConfig {
    /// Every dimension must reach this share of the largest dimension.
    pub min_share: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    /// Position of the positive threshold within the score range; 0.625
    /// puts it at 3.5 on a 1–5 scale.
    pub positive_at: f64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self { min_share: 0.8, ratio_lo: 0.35, ratio_hi: 0.65, positive_at: 0.625 }
    }
}

impl BalanceConfig {
    pub fn threshold(&self, dim: &Dimension) -> f64 {
        dim.lo + self.positive_at * (dim.hi - dim.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceStatus {
    Ok,
    Upsampled,
    Deficient,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionBalance {
    pub dimension: String,
    pub before: usize,
    pub after: usize,
    pub positive_ratio_before: Option<f64>,
    pub positive_ratio_after: Option<f64>,
    pub status: BalanceStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub target_count: usize,
    pub dimensions: Vec<DimensionBalance>,
}

impl BalanceReport {
    pub fn all_green(&self) -> bool {
        self.dimensions.iter().all(|d| d.status == BalanceStatus::Ok)
    }

    pub fn flagged(&self, status: BalanceStatus) -> Vec<&str> {
        self.dimensions.iter().filter(|d| d.status == status).map(|d| d.dimension.as_str()).collect()
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    count: usize,
    scored: usize,
    positive: usize,
}

impl Tally {
    fn ratio(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.positive as f64 / self.scored as f64)
    }
}

fn tally(corpus: &[QATriplet], dim: &Dimension, cfg: &BalanceConfig) -> Tally {
    let th = cfg.threshold(dim);
    let mut t = Tally::default();
    for q in corpus.iter().filter(|q| q.dimension == dim.key && q.split != Split::Reserve) {
        t.count += 1;
        if let Some(s) = q.answer_score {
            t.scored += 1;
            t.positive += usize::from(s >= th);
        }
    }
    t
}

/// Upsamples under-represented dimensions (and the minority sentiment within
/// each) by copying existing triplets of the same dimension. Copies are
/// appended after the originals and flagged `augmented`.
pub fn balance_dimensions(
    corpus: &[QATriplet],
    registry: &DimensionRegistry,
    cfg: &BalanceConfig,
    seed: u64,
) -> (Vec<QATriplet>, BalanceReport) {
    let mut out = corpus.to_vec();
    let before: Vec<Tally> = registry.iter().map(|d| tally(corpus, d, cfg)).collect();
    let mut notes: Vec<Option<String>> = vec![None; registry.len()];

    // sentiment first, then counts against the post-sentiment maximum
    for pass in 0..2 {
        let target = if pass == 0 {
            0
        } else {
            let max = registry.iter().map(|d| tally(&out, d, cfg).count).max().unwrap_or(0);
            (cfg.min_share * max as f64).ceil() as usize
        };
        for (k, dim) in registry.iter().enumerate() {
            if notes[k].is_some() {
                continue;
            }
            let th = cfg.threshold(dim);
            let donors: Vec<usize> = (0..corpus.len())
                .filter(|i| corpus[*i].dimension == dim.key && corpus[*i].split != Split::Reserve)
                .collect();
            if donors.is_empty() {
                continue;
            }
            let pos: Vec<usize> = donors.iter().copied().filter(|i| corpus[*i].answer_score.is_some_and(|s| s >= th)).collect();
            let neg: Vec<usize> = donors.iter().copied().filter(|i| corpus[*i].answer_score.is_some_and(|s| s < th)).collect();
            let mut t = tally(&out, dim, cfg);
            let mut draw = rng::stream(seed, rng::key_stream(&dim.key) ^ pass);
            let limit = 20 * corpus.len().max(1);
            let mut added = 0;
            loop {
                let ratio = t.ratio();
                let low = ratio.is_some_and(|r| r < cfg.ratio_lo);
                let high = ratio.is_some_and(|r| r > cfg.ratio_hi);
                if !low && !high && t.count >= target {
                    break;
                }
                let pool: &[usize] = match ratio {
                    None => &donors,
                    Some(_) if low => &pos,
                    Some(_) if high => &neg,
                    Some(r) => {
                        let (toward, away) = if r < 0.5 { (&pos, &neg) } else { (&neg, &pos) };
                        if toward.is_empty() { away } else { toward }
                    }
                };
                if pool.is_empty() || added >= limit {
                    let which = if low { "positive" } else if high { "negative" } else { "any" };
                    notes[k] = Some(format!("no {which} donors for {}", dim.key));
                    break;
                }
                let src = pool[draw.random_range(0..pool.len())];
                let mut copy = corpus[src].clone();
                copy.augmented = true;
                if let Some(s) = copy.answer_score {
                    t.scored += 1;
                    t.positive += usize::from(s >= th);
                }
                t.count += 1;
                added += 1;
                out.push(copy);
            }
        }
    }

    let max = registry.iter().map(|d| tally(&out, d, cfg).count).max().unwrap_or(0);
    let target_count = (cfg.min_share * max as f64).ceil() as usize;
    let dimensions = registry
        .iter()
        .enumerate()
        .map(|(k, dim)| {
            let after = tally(&out, dim, cfg);
            let status = if before[k].count == 0 {
                BalanceStatus::Empty
            } else if notes[k].is_some() {
                BalanceStatus::Deficient
            } else if after.count > before[k].count {
                BalanceStatus::Upsampled
            } else {
                BalanceStatus::Ok
            };
            DimensionBalance {
                dimension: dim.key.clone(),
                before: before[k].count,
                after: after.count,
                positive_ratio_before: before[k].ratio(),
                positive_ratio_after: after.ratio(),
                status,
                note: if status == BalanceStatus::Empty { Some(format!("no triplets for {}", dim.key)) } else { notes[k].clone() },
            }
        })
        .collect();
    (out, BalanceReport { target_count, dimensions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dim: &str, score: f64) -> QATriplet {
        QATriplet {
            image_id: format!("img-{score}"),
            question: "how clean is this street".into(),
            answer_score: Some(score),
            answer_text: "clean".into(),
            dimension: dim.into(),
            split: Split::Train,
            augmented: false,
        }
    }

    fn corpus(counts: &[(&str, usize)]) -> Vec<QATriplet> {
        counts.iter().flat_map(|(d, n)| (0..*n).map(move |i| t(d, if i % 2 == 0 { 4.0 } else { 2.0 }))).collect()
    }

    #[test]
    fn balanced_corpus_unchanged() {
        let reg = DimensionRegistry::subjective();
        let c = corpus(&reg.keys().iter().map(|k| (*k, 10)).collect::<Vec<_>>());
        let (out, report) = balance_dimensions(&c, &reg, &BalanceConfig::default(), 0);
        assert_eq!(out, c);
        assert!(report.all_green());
    }

    #[test]
    fn half_size_dimension_is_upsampled() {
        let reg = DimensionRegistry::subjective();
        let mut counts: Vec<(&str, usize)> = reg.keys().iter().map(|k| (*k, 20)).collect();
        counts[1].1 = 10;
        let (out, report) = balance_dimensions(&corpus(&counts), &reg, &BalanceConfig::default(), 0);
        let clean = out.iter().filter(|q| q.dimension == "cleanliness").count();
        assert!(clean >= 16);
        assert!(out[110..].iter().all(|q| q.augmented));
        assert_eq!(report.flagged(BalanceStatus::Upsampled), vec!["cleanliness"]);
        let r = report.dimensions[1].positive_ratio_after.unwrap();
        assert!((0.35..=0.65).contains(&r));
    }

    #[test]
    fn single_dimension_corpus_flags_the_rest() {
        let reg = DimensionRegistry::subjective();
        let (_, report) = balance_dimensions(&corpus(&[("cleanliness", 8)]), &reg, &BalanceConfig::default(), 0);
        assert_eq!(report.flagged(BalanceStatus::Empty).len(), 5);
    }

    #[test]
    fn missing_sentiment_donors_reported() {
        let reg = DimensionRegistry::subjective();
        let c: Vec<QATriplet> = (0..6).map(|_| t("cleanliness", 1.0)).collect();
        let (_, report) = balance_dimensions(&c, &reg, &BalanceConfig::default(), 0);
        assert_eq!(report.flagged(BalanceStatus::Deficient), vec!["cleanliness"]);
    }
}
