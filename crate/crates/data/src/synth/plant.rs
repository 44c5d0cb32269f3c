//! Planted near-duplicates for exercising deduplication.

use msef_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{draw_scene, GenConfig};
use super::render::render_scene;
use crate::error::{DataError, Result};
use crate::records::{quantize, ImageRecord};

const METERS_PER_DEGREE: f64 = 111_000.0;
const LATER: i64 = 365 * 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    /// Same pixels up to a few one-level changes, far away.
    Hash,
    /// Different pixels within a few meters.
    Geo,
    /// A far-away hash copy plus a geo neighbour of that copy.
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub kind: PlantKind,
    pub source: String,
    /// Ids that must be removed in favour of `source`.
    pub copies: Vec<String>,
}

fn copy_of(src: &ImageRecord, id: String, k: usize) -> ImageRecord {
    let mut r = src.clone();
    r.image_id = id;
    r.capture_time = src.capture_time + LATER + k as i64;
    r
}

fn far_away(r: &mut ImageRecord, k: usize) {
    r.lat = (r.lat + 0.5 + 0.01 * k as f64).min(89.0);
}

fn nudge(r: &mut ImageRecord, draw: &mut impl Rng) {
    for _ in 0..3 {
        let p = draw.random_range(0..r.pixels.len());
        r.pixels[p] = if r.pixels[p] == 255 { 254 } else { r.pixels[p] + 1 };
    }
}

fn near(r: &mut ImageRecord, anchor: &ImageRecord, draw: &mut impl Rng, max_m: f64) {
    let d = draw.random_range(0.5..max_m);
    let bearing: f64 = draw.random_range(0.0..std::f64::consts::TAU);
    r.lat = anchor.lat + d * bearing.cos() / METERS_PER_DEGREE;
    r.lon = anchor.lon + d * bearing.sin() / (METERS_PER_DEGREE * anchor.lat.to_radians().cos());
}

fn fresh_pixels(r: &mut ImageRecord, seed: u64, draw: &mut impl Rng) -> Result<()> {
    let cfg = GenConfig { seed, ..GenConfig::default() };
    let mut stream = rng::stream(seed, draw.random());
    let spec = draw_scene(&cfg, &r.community_id, r.tier, &mut stream);
    let img = render_scene(&spec)?;
    r.pixels = img.pixels.iter().map(|p| quantize(*p)).collect();
    Ok(())
}

/// Appends planted duplicates of distinct source records, cycling through
/// `kinds`. Geo neighbours sit strictly within `geo_max_m` of their anchor.
pub fn plant_duplicates(
    records: &[ImageRecord],
    kinds: &[PlantKind],
    geo_max_m: f64,
    seed: u64,
) -> Result<(Vec<ImageRecord>, Vec<Planted>)> {
    if kinds.len() > records.len() || geo_max_m <= 1.0 {
        return Err(DataError::Input("need one source record per plant and a geo radius above 1 m".into()));
    }
    let mut draw = rng::stream(seed, rng::key_stream("plant"));
    let sources = rand::seq::index::sample(&mut draw, records.len(), kinds.len()).into_vec();
    let mut out = records.to_vec();
    let mut planted = Vec::with_capacity(kinds.len());
    for (k, (kind, s)) in kinds.iter().zip(sources).enumerate() {
        let src = &records[s];
        let mut copies = Vec::new();
        match kind {
            PlantKind::Hash => {
                let mut c = copy_of(src, format!("{}-dup{k}", src.image_id), k);
                nudge(&mut c, &mut draw);
                far_away(&mut c, k);
                copies.push(c);
            }
            PlantKind::Geo => {
                let mut c = copy_of(src, format!("{}-geo{k}", src.image_id), k);
                fresh_pixels(&mut c, seed, &mut draw)?;
                near(&mut c, src, &mut draw, geo_max_m);
                copies.push(c);
            }
            PlantKind::Chain => {
                let mut a = copy_of(src, format!("{}-dup{k}", src.image_id), k);
                nudge(&mut a, &mut draw);
                far_away(&mut a, k);
                let mut b = copy_of(&a, format!("{}-geo{k}", src.image_id), 1);
                fresh_pixels(&mut b, seed, &mut draw)?;
                near(&mut b, &a, &mut draw, geo_max_m);
                copies.push(a);
                copies.push(b);
            }
        }
        planted.push(Planted { kind: *kind, source: src.image_id.clone(), copies: copies.iter().map(|c| c.image_id.clone()).collect() });
        out.extend(copies);
    }
    Ok((out, planted))
}
