//! Average hash and duplicate detection.

use msef_core::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::records::ImageRecord;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// 64-bit average hash: 8×8 box means thresholded at their mean, packed
/// row-major with the first cell in the most significant bit. Cells equal to
/// the mean set their bit.
pub fn phash(image: &GrayImage) -> Result<u64> {
    if image.height == 0 || image.width == 0 || image.pixels.len() != image.height * image.width {
        return Err(DataError::Input("cannot hash an empty image".into()));
    }
    let mut cells = [0.0f64; 64];
    for (cell, value) in cells.iter_mut().enumerate() {
        let (cr, cc) = (cell / 8, cell % 8);
        // cell boundaries by proportional split; images smaller than 8
        // pixels reuse rows/columns
        let r0 = cr * image.height / 8;
        let r1 = ((cr + 1) * image.height / 8).max(r0 + 1);
        let c0 = cc * image.width / 8;
        let c1 = ((cc + 1) * image.width / 8).max(c0 + 1);
        let mut sum = 0.0;
        for r in r0..r1 {
            for c in c0..c1 {
                sum += image.get(r.min(image.height - 1), c.min(image.width - 1));
            }
        }
        *value = sum / ((r1 - r0) * (c1 - c0)) as f64;
    }
    let mean = cells.iter().sum::<f64>() / 64.0;
    Ok(cells.iter().fold(0u64, |h, v| (h << 1) | u64::from(*v >= mean)))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

/// Great-circle distance in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub hamming_max: u32,
    pub geo_max_m: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { hamming_max: 10, geo_max_m: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DupRule {
    Hash,
    Geo,
}

/// Audit line for one removed record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupLog {
    pub removed: String,
    pub kept: String,
    /// The record whose match linked `removed` into the group.
    pub matched: String,
    pub rule: DupRule,
    pub hamming: u32,
    pub distance_m: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn earlier(a: &ImageRecord, b: &ImageRecord) -> bool {
    (a.capture_time, &a.image_id) < (b.capture_time, &b.image_id)
}

/// Collapses every group of records connected by the hash or the geo rule
/// to its earliest capture (ties: smallest id). Output keeps input order.
pub fn dedup(records: &[ImageRecord], config: DedupConfig) -> Result<(Vec<ImageRecord>, Vec<DedupLog>)> {
    use rayon::prelude::*;

    let hashes: Vec<u64> = records.par_iter().map(|r| phash(&r.image())).collect::<Result<_>>()?;
    let n = records.len();
    // (i, j, rule, hamming, distance) with i < j
    let mut edges: Vec<(usize, usize, DupRule, u32, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let hashes = &hashes;
            (i + 1..n).filter_map(move |j| {
                let h = hamming(hashes[i], hashes[j]);
                let close_lat = (records[i].lat - records[j].lat).abs() * 111_000.0 <= config.geo_max_m * 1.01 + 1.0;
                let d = if close_lat {
                    haversine_m(records[i].lat, records[i].lon, records[j].lat, records[j].lon)
                } else {
                    f64::INFINITY
                };
                if h <= config.hamming_max {
                    Some((i, j, DupRule::Hash, h, d))
                } else if d <= config.geo_max_m {
                    Some((i, j, DupRule::Geo, h, d))
                } else {
                    None
                }
            })
        })
        .collect();
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut uf = UnionFind::new(n);
    for e in &edges {
        uf.union(e.0, e.1);
    }
    let mut survivor: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = uf.find(i);
        match survivor[root] {
            Some(s) if !earlier(&records[i], &records[s]) => {}
            _ => survivor[root] = Some(i),
        }
    }
    let mut first_edge: Vec<Option<usize>> = vec![None; n];
    for (k, e) in edges.iter().enumerate() {
        for end in [e.0, e.1] {
            if first_edge[end].is_none() {
                first_edge[end] = Some(k);
            }
        }
    }
    let mut kept = Vec::new();
    let mut log = Vec::new();
    for i in 0..n {
        let s = survivor[uf.find(i)].expect("every group has a survivor");
        if s == i {
            kept.push(records[i].clone());
            continue;
        }
        let e = edges[first_edge[i].expect("removed records have an edge")];
        let other = if e.0 == i { e.1 } else { e.0 };
        log.push(DedupLog {
            removed: records[i].image_id.clone(),
            kept: records[s].image_id.clone(),
            matched: records[other].image_id.clone(),
            rule: e.2,
            hamming: e.3,
            distance_m: if e.4.is_finite() {
                e.4
            } else {
                haversine_m(records[i].lat, records[i].lon, records[other].lat, records[other].lon)
            },
        });
    }
    Ok((kept, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_bright_image() {
        let mut img = GrayImage::filled(8, 8, 0.0);
        for r in 0..8 {
            for c in 0..4 {
                img.set(r, c, 1.0);
            }
        }
        assert_eq!(phash(&img).unwrap(), 0xF0F0_F0F0_F0F0_F0F0);
    }

    #[test]
    fn constant_image_sets_every_bit() {
        assert_eq!(phash(&GrayImage::filled(32, 32, 0.4)).unwrap(), u64::MAX);
    }

    #[test]
    fn copies_hash_identically() {
        let img = GrayImage::new(2, 3, vec![0.1, 0.5, 0.9, 0.3, 0.2, 0.8]).unwrap();
        assert_eq!(hamming(phash(&img).unwrap(), phash(&img.clone()).unwrap()), 0);
    }

    #[test]
    fn haversine_scale() {
        // one degree of latitude ≈ 111.2 km
        assert!((haversine_m(45.0, 126.0, 46.0, 126.0) - 111_195.0).abs() < 10.0);
        assert_eq!(haversine_m(45.0, 126.0, 45.0, 126.0), 0.0);
    }
}
