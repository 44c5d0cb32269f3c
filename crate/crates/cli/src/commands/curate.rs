use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use msef_data::balance::balance_dimensions;
use msef_data::io::{read_communities, read_images, read_ratings, read_triplets, write_csv, write_images, write_jsonl, write_triplets};
use msef_data::likert::{aggregate_scores, normalize_ratings};
use msef_data::phash::dedup;
use msef_data::scrub::{AliasTable, Scrubber};
use msef_data::synth::corpus::{COMMUNITIES_FILE, IMAGES_FILE, RATINGS_FILE, TRIPLETS_FILE};
use msef_data::tiers::{fixed_tiers, quintile_bin, stratified_split, HARBIN_THRESHOLDS};
use msef_data::validate::Mode;
use msef_data::{DataError, DimensionRegistry, QATriplet, Split};
use serde::{Deserialize, Serialize};

use super::{ensure_dir, require};
use crate::config::{Layout, RunConfig, Tiering, ValidationMode};
use crate::error::{CliError, Result};

pub const HUMAN_SCORES_FILE: &str = "human_scores.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const SUMMARY_FILE: &str = "curation.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub line: usize,
    pub severity: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redaction {
    pub line: usize,
    pub image_id: String,
    pub field: String,
    pub replacements: usize,
}

/// One community's split assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub community_id: String,
    pub tier: u8,
    pub price_per_sqm: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSplit {
    pub tier: u8,
    pub communities: usize,
    pub val: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationSummary {
    pub triplets_in: usize,
    pub invalid: usize,
    pub redactions: usize,
    pub images_in: usize,
    pub duplicates_removed: usize,
    pub ratings: usize,
    pub augmented: usize,
    pub reserve_dropped: usize,
    pub train_communities: usize,
    pub val_communities: usize,
    pub triplets_out: usize,
}

fn audit_path(layout: &Layout, stage: &str) -> std::path::PathBuf {
    layout.curated.join("audit").join(format!("{stage}.jsonl"))
}

/// Reads the split assignment written by curation.
pub fn read_split(path: &Path) -> Result<Vec<SplitRow>> {
    require(path, "split assignment")?;
    Ok(msef_data::io::read_csv(path)?)
}

/// validate → scrub → dedup → normalize → balance → split.
pub fn run(config: &RunConfig, layout: &Layout) -> Result<CurationSummary> {
    let registry = DimensionRegistry::default();
    let files = [
        (TRIPLETS_FILE, "triplets file"),
        (IMAGES_FILE, "images file"),
        (RATINGS_FILE, "ratings file"),
        (COMMUNITIES_FILE, "communities file"),
    ];
    for (name, what) in files {
        require(&layout.corpus.join(name), what)?;
    }
    ensure_dir(&layout.curated.join("audit"))?;
    let cur = &config.curation;

    // validate
    let mode = match cur.validation {
        ValidationMode::Strict => Mode::Strict,
        ValidationMode::Lenient => Mode::Lenient,
    };
    let parsed = read_triplets(&layout.corpus.join(TRIPLETS_FILE), &registry, mode)?;
    let images = read_images(&layout.corpus.join(IMAGES_FILE))?;
    let ratings = read_ratings(&layout.corpus.join(RATINGS_FILE))?;
    let communities = read_communities(&layout.corpus.join(COMMUNITIES_FILE))?;
    let image_ids: BTreeSet<&str> = images.iter().map(|i| i.image_id.as_str()).collect();

    let mut issues: Vec<ValidationIssue> = parsed
        .errors
        .iter()
        .map(|e| match e {
            DataError::Line { line, source, .. } => ValidationIssue { line: *line, severity: "error".into(), message: source.to_string() },
            other => ValidationIssue { line: 0, severity: "error".into(), message: other.to_string() },
        })
        .collect();
    let mut triplets: Vec<(usize, QATriplet)> = Vec::new();
    for (line, p) in parsed.parsed {
        if !image_ids.contains(p.triplet.image_id.as_str()) {
            issues.push(ValidationIssue { line, severity: "error".into(), message: format!("unknown image `{}`", p.triplet.image_id) });
            continue;
        }
        for f in &p.unknown_fields {
            issues.push(ValidationIssue { line, severity: "warning".into(), message: format!("unknown field `{f}` ignored") });
        }
        triplets.push((line, p.triplet));
    }
    issues.sort_by_key(|i| i.line);
    write_jsonl(&audit_path(layout, "validate"), &issues)?;
    let errors: Vec<&ValidationIssue> = issues.iter().filter(|i| i.severity == "error").collect();
    if cur.validation == ValidationMode::Strict && !errors.is_empty() {
        let listing: Vec<String> = errors.iter().take(20).map(|i| format!("  line {}: {}", i.line, i.message)).collect();
        return Err(CliError::user(format!("{} invalid triplet(s):\n{}", errors.len(), listing.join("\n"))));
    }
    let triplets_in = triplets.len() + errors.len();

    // scrub
    let scrubber = Scrubber::new(&AliasTable::default());
    let mut redactions = Vec::new();
    for (line, t) in &mut triplets {
        for (field, text) in [("question", &mut t.question), ("answer_text", &mut t.answer_text)] {
            let (clean, n) = scrubber.scrub(text);
            if n > 0 {
                *text = clean;
                redactions.push(Redaction { line: *line, image_id: t.image_id.clone(), field: field.into(), replacements: n });
            }
        }
    }
    write_jsonl(&audit_path(layout, "scrub"), &redactions)?;

    // dedup
    let (mut kept, dedup_log) = dedup(&images, cur.dedup())?;
    write_jsonl(&audit_path(layout, "dedup"), &dedup_log)?;
    let kept_ids: BTreeSet<String> = kept.iter().map(|i| i.image_id.clone()).collect();
    let mut triplets: Vec<QATriplet> = triplets.into_iter().map(|(_, t)| t).filter(|t| kept_ids.contains(&t.image_id)).collect();
    let ratings: Vec<_> = ratings.into_iter().filter(|r| kept_ids.contains(&r.image_id)).collect();

    // normalize
    let (normalized, norm_log) = normalize_ratings(&ratings);
    write_jsonl(&audit_path(layout, "normalize"), &norm_log)?;
    write_csv(&layout.curated.join(HUMAN_SCORES_FILE), &aggregate_scores(&normalized))?;

    // balance
    let (active, reserve): (Vec<QATriplet>, Vec<QATriplet>) = triplets.drain(..).partition(|t| t.split != Split::Reserve);
    let (mut balanced, report) = balance_dimensions(&active, &registry, &cur.balance, config.seed);
    write_jsonl(&audit_path(layout, "balance"), &report.dimensions)?;
    let augmented = balanced.len() - active.len();
    balanced.extend(reserve);

    // split
    let present: BTreeSet<&str> = kept.iter().map(|i| i.community_id.as_str()).collect();
    let priced: Vec<(String, f64)> = communities
        .iter()
        .filter(|c| present.contains(c.community_id.as_str()))
        .map(|c| (c.community_id.clone(), c.price_per_sqm))
        .collect();
    let tiering = match cur.tiering {
        Tiering::Quintile => quintile_bin(&priced)?,
        Tiering::Fixed => fixed_tiers(&priced, HARBIN_THRESHOLDS),
    };
    let tiered: Vec<(String, u8)> = priced.iter().zip(&tiering.tiers).map(|((id, _), t)| (id.clone(), *t)).collect();
    let split = stratified_split(&tiered, cur.val_fraction, config.seed)?;
    let tier_of: BTreeMap<&str, u8> = tiered.iter().map(|(id, t)| (id.as_str(), *t)).collect();
    let rows: Vec<SplitRow> = priced
        .iter()
        .map(|(id, price)| SplitRow {
            community_id: id.clone(),
            tier: tier_of[id.as_str()],
            price_per_sqm: *price,
            split: if split.val.contains(id) { Split::Val } else { Split::Train },
        })
        .collect();
    let mut tier_log: Vec<TierSplit> = (0..msef_data::tiers::TIERS as u8)
        .map(|tier| TierSplit {
            tier,
            communities: rows.iter().filter(|r| r.tier == tier).count(),
            val: rows.iter().filter(|r| r.tier == tier && r.split == Split::Val).count(),
            warnings: Vec::new(),
        })
        .collect();
    for w in &split.warnings {
        if let Some(t) = tier_log.iter_mut().find(|t| w.starts_with(&format!("tier {} ", t.tier))) {
            t.warnings.push(w.clone());
        }
    }
    write_jsonl(&audit_path(layout, "split"), &tier_log)?;
    write_csv(&layout.curated.join(SPLIT_FILE), &rows)?;

    let community_of: BTreeMap<String, String> = kept.iter().map(|i| (i.image_id.clone(), i.community_id.clone())).collect();
    let mut out = Vec::with_capacity(balanced.len());
    let mut reserve_dropped = 0;
    for mut t in balanced {
        let val = split.val.contains(&community_of[&t.image_id]);
        match (t.split, val) {
            (Split::Reserve, true) => reserve_dropped += 1,
            (Split::Reserve, false) => out.push(t),
            (_, v) => {
                t.split = if v { Split::Val } else { Split::Train };
                out.push(t);
            }
        }
    }
    for image in &mut kept {
        image.tier = tier_of[image.community_id.as_str()];
    }
    write_triplets(&layout.curated.join(TRIPLETS_FILE), &out)?;
    write_images(&layout.curated.join(IMAGES_FILE), &kept)?;

    let summary = CurationSummary {
        triplets_in,
        invalid: errors.len(),
        redactions: redactions.iter().map(|r| r.replacements).sum(),
        images_in: images.len(),
        duplicates_removed: dedup_log.len(),
        ratings: normalized.len(),
        augmented,
        reserve_dropped,
        train_communities: split.train.len(),
        val_communities: split.val.len(),
        triplets_out: out.len(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    super::write_text(&layout.curated.join(SUMMARY_FILE), &text)?;
    Ok(summary)
}
