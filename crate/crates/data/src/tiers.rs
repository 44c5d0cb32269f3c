//! Housing-price tiers and the tier-stratified holdout.

use std::collections::{BTreeMap, BTreeSet};

use msef_core::rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

pub const TIERS: usize = 5;

/// Price thresholds (¥/m²) separating the five Harbin tiers.
pub const HARBIN_THRESHOLDS: [f64; 4] = [5000.0, 6800.0, 8200.0, 10000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tiering {
    /// Tier of each input item, in input order.
    pub tiers: Vec<u8>,
    /// Lowest price admitted to tiers 1–4.
    pub thresholds: [f64; 4],
}

impl Tiering {
    pub fn sizes(&self) -> [usize; TIERS] {
        let mut s = [0; TIERS];
        for t in &self.tiers {
            s[*t as usize] += 1;
        }
        s
    }
}

/// Equal-frequency quintiles over `(community_id, price)`. Items are ranked by
/// price, ties by id; a remainder goes to the lowest bins first.
pub fn quintile_bin(items: &[(String, f64)]) -> Result<Tiering> {
    let n = items.len();
    if n < TIERS {
        return Err(DataError::Input(format!("quintiles need at least {TIERS} communities, got {n}")));
    }
    if let Some((id, _)) = items.iter().find(|(_, p)| !p.is_finite()) {
        return Err(DataError::Input(format!("community {id} has a non-finite price")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| items[*a].1.total_cmp(&items[*b].1).then_with(|| items[*a].0.cmp(&items[*b].0)));
    let (base, rem) = (n / TIERS, n % TIERS);
    let mut tiers = vec![0u8; n];
    let mut thresholds = [0.0; 4];
    let mut pos = 0;
    for t in 0..TIERS {
        let size = base + usize::from(t < rem);
        if t > 0 {
            thresholds[t - 1] = items[order[pos]].1;
        }
        for k in &order[pos..pos + size] {
            tiers[*k] = t as u8;
        }
        pos += size;
    }
    Ok(Tiering { tiers, thresholds })
}

/// Tiers from fixed thresholds: an item's tier is the number of thresholds
/// at or below its price.
pub fn fixed_tiers(items: &[(String, f64)], thresholds: [f64; 4]) -> Tiering {
    let tiers = items.iter().map(|(_, p)| thresholds.iter().filter(|t| **t <= *p).count() as u8).collect();
    Tiering { tiers, thresholds }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySplit {
    pub train: BTreeSet<String>,
    pub val: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Holds out `round(count × fraction)` communities per tier (at least one),
/// chosen by a seeded shuffle. A tier with a single community keeps it in
/// training.
pub fn stratified_split(communities: &[(String, u8)], val_fraction: f64, seed: u64) -> Result<CommunitySplit> {
    if !(0.0..=1.0).contains(&val_fraction) {
        return Err(DataError::Input(format!("validation fraction {val_fraction} outside [0, 1]")));
    }
    let mut by_tier: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for (id, t) in communities {
        by_tier.entry(*t).or_default().push(id.clone());
    }
    let mut split = CommunitySplit { train: BTreeSet::new(), val: BTreeSet::new(), warnings: Vec::new() };
    for (tier, mut ids) in by_tier {
        ids.sort();
        ids.dedup();
        let count = ids.len();
        let mut k = if val_fraction > 0.0 { ((count as f64 * val_fraction).round() as usize).max(1) } else { 0 };
        if k >= count && count == 1 {
            split.warnings.push(format!("tier {tier} has a single community ({}); kept in train", ids[0]));
            k = 0;
        }
        k = k.min(count);
        ids.shuffle(&mut rng::stream(seed, 0x5eed_0000 + u64::from(tier)));
        for (i, id) in ids.into_iter().enumerate() {
            if i < k {
                split.val.insert(id);
            } else {
                split.train.insert(id);
            }
        }
    }
    Ok(split)
}
