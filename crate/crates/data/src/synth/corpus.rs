use std::collections::BTreeMap;
use std::path::Path;

use msef_core::rng::{self, Rng as CoreRng};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::effects::{plant_satisfaction, EffectModel, SceneSpec, CONNECTIVITY, TABLE1_BETAS};
use super::render::render_scene;
use super::text::{alternate_answer, answer_text, question};
use crate::error::{DataError, Result};
use crate::io::{sha256_bytes, sha256_file, write_communities, write_images, write_ratings, write_triplets};
use crate::records::{quantize, Community, ImageRecord, LandUse, QATriplet, RatingRecord, Split, FEATURE_HI, FEATURE_LO};
use crate::registry::{DimensionRegistry, OBJECTIVE, SUBJECTIVE};
use crate::tiers::TIERS;

pub const MANIFEST_FORMAT: &str = "msef-manifest";
pub const COMMUNITIES_FILE: &str = "communities.csv";
pub const IMAGES_FILE: &str = "images.jsonl";
pub const RATINGS_FILE: &str = "ratings.csv";
pub const TRIPLETS_FILE: &str = "triplets.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Price band `[lo, hi)` per tier, separated by the fixed city thresholds.
pub const TIER_BANDS: [(f64, f64); TIERS] =
    [(3500.0, 5000.0), (5000.0, 6800.0), (6800.0, 8200.0), (8200.0, 10000.0), (10000.0, 13000.0)];

const ORIGIN: (f64, f64) = (45.70, 126.55);
const METERS_PER_DEGREE: f64 = 111_000.0;
const EPOCH: i64 = 1_600_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectivityDesign {
    /// Drawn like every other feature.
    Normal,
    /// Uniform over the whole feature scale.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentProfile {
    pub respondent_id: String,
    pub bias: f64,
    pub spread: f64,
    pub skip_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub communities: usize,
    pub images_per_community: usize,
    pub respondents: usize,
    pub raters_per_image: usize,
    pub bias_max: f64,
    pub spread_lo: f64,
    pub spread_hi: f64,
    pub skip_prob: f64,
    pub rating_noise_sd: f64,
    pub feature_mean: f64,
    pub feature_sd: f64,
    pub connectivity: ConnectivityDesign,
    pub commercial_share: f64,
    /// Alternate phrasings per image placed in the reserve buffer.
    pub alternates_per_image: usize,
    pub spacing_m: f64,
    pub jitter_m: f64,
    pub effects: EffectModel,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            communities: 25,
            images_per_community: 4,
            respondents: 20,
            raters_per_image: 2,
            bias_max: 1.0,
            spread_lo: 0.7,
            spread_hi: 1.3,
            skip_prob: 0.05,
            rating_noise_sd: 0.3,
            feature_mean: 4.0,
            feature_sd: 0.8,
            connectivity: ConnectivityDesign::Normal,
            commercial_share: 0.5,
            alternates_per_image: 1,
            spacing_m: 20.0,
            jitter_m: 3.0,
            effects: EffectModel::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DataError::Input(m.to_string()));
        if self.communities == 0 || self.images_per_community == 0 || self.respondents == 0 {
            return bad("communities, images per community and respondents must all be at least 1");
        }
        if self.raters_per_image == 0 || self.raters_per_image > self.respondents {
            return bad("raters per image must be between 1 and the number of respondents");
        }
        if !(self.spread_lo > 0.0 && self.spread_lo <= self.spread_hi) {
            return bad("respondent spread range must be positive and ordered");
        }
        if !(0.0..1.0).contains(&self.skip_prob) || !(0.0..=1.0).contains(&self.commercial_share) {
            return bad("skip probability must be in [0, 1) and commercial share in [0, 1]");
        }
        if !(self.bias_max >= 0.0 && self.rating_noise_sd >= 0.0 && self.feature_sd >= 0.0) {
            return bad("bias, rating noise and feature sd must be non-negative");
        }
        if !(self.jitter_m >= 0.0 && self.spacing_m > 2.0 * self.jitter_m) {
            return bad("spacing must exceed twice the jitter");
        }
        self.effects.validate()
    }

    /// Expected `(connectivity − peak)²` under the design.
    pub fn quad_expectation(&self) -> f64 {
        let peak = self.effects.quad_peak;
        match self.connectivity {
            ConnectivityDesign::Normal => (self.feature_mean - peak).powi(2) + self.feature_sd.powi(2),
            ConnectivityDesign::Uniform => {
                let (a, b) = (FEATURE_LO - peak, FEATURE_HI - peak);
                (b.powi(3) - a.powi(3)) / (3.0 * (b - a))
            }
        }
    }

    /// The effect model with its quadratic centering resolved.
    pub fn resolved_effects(&self) -> EffectModel {
        let mut fx = self.effects.clone();
        fx.quad_center.get_or_insert(self.quad_expectation());
        fx
    }

    pub fn image_count(&self) -> usize {
        self.communities * self.images_per_community
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub communities: usize,
    pub images: usize,
    pub ratings: usize,
    pub triplets: usize,
}

/// Every planted parameter, for use as an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub config: GenConfig,
    pub effects: EffectModel,
    pub table1_betas: BTreeMap<String, f64>,
    pub quad_vertex: f64,
    pub tier_bands: Vec<(f64, f64)>,
    pub respondents: Vec<RespondentProfile>,
    pub counts: Counts,
    /// SHA-256 of every other corpus file, filled in when written.
    #[serde(default)]
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub communities: Vec<Community>,
    pub images: Vec<ImageRecord>,
    pub ratings: Vec<RatingRecord>,
    pub triplets: Vec<QATriplet>,
    pub manifest: Manifest,
}

/// Maps a 1–7 value onto the 1–5 Likert scale.
pub fn to_likert(v: f64) -> f64 {
    1.0 + (v - FEATURE_LO) * 4.0 / (FEATURE_HI - FEATURE_LO)
}

/// Planted value of every registry dimension for one image: Likert scale for
/// survey dimensions, feature scale for coded attributes.
pub fn truth_scores(image: &ImageRecord) -> BTreeMap<String, f64> {
    let f = |k: &str| image.feature(k);
    let satisfaction = image.satisfaction.unwrap_or(0.5 * (FEATURE_LO + FEATURE_HI));
    let subjective = [
        f("connectivity"),
        (f("greenery") + FEATURE_LO + FEATURE_HI - f("motorization")) / 2.0,
        f("perceived_safety"),
        f("visual_richness"),
        f("commercial_intensity"),
        satisfaction,
    ];
    let objective = [
        f("pedestrian_width"),
        f("vehicle_lane_width"),
        f("greenery"),
        f("motorization"),
        f("commercial_intensity"),
        image.openness,
        f("public_amenities"),
    ];
    let mut out: BTreeMap<String, f64> =
        SUBJECTIVE.iter().zip(subjective).map(|(k, v)| (k.to_string(), to_likert(v))).collect();
    out.extend(OBJECTIVE.iter().zip(objective).map(|(k, v)| (k.to_string(), v)));
    out
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// One respondent's Likert answer: shifted, stretched about the midpoint,
/// clipped, then rounded half up.
pub fn respond(profile: &RespondentProfile, truth: f64, noise: f64) -> u8 {
    let v = (3.0 + profile.spread * (truth - 3.0) + profile.bias + noise).clamp(1.0, 5.0);
    round_half_up(v) as u8
}

pub fn respondent_profiles(config: &GenConfig) -> Vec<RespondentProfile> {
    let mut r = rng::stream(config.seed, rng::key_stream("respondents"));
    (0..config.respondents)
        .map(|i| {
            let bias = if config.bias_max > 0.0 { r.random_range(-config.bias_max..=config.bias_max) } else { 0.0 };
            let spread = if config.spread_hi > config.spread_lo {
                r.random_range(config.spread_lo..=config.spread_hi)
            } else {
                config.spread_lo
            };
            RespondentProfile { respondent_id: format!("r{i:03}"), bias, spread, skip_prob: config.skip_prob }
        })
        .collect()
}

fn clip_feature(v: f64) -> f64 {
    v.clamp(FEATURE_LO, FEATURE_HI)
}

/// Draws one scene's attributes.
pub fn draw_scene(config: &GenConfig, community_id: &str, tier: u8, r: &mut CoreRng) -> SceneSpec {
    let normal = Normal::new(config.feature_mean, config.feature_sd).expect("validated sd");
    let mut features = [0.0; 9];
    for (i, f) in features.iter_mut().enumerate() {
        *f = if i == CONNECTIVITY && config.connectivity == ConnectivityDesign::Uniform {
            r.random_range(FEATURE_LO..=FEATURE_HI)
        } else {
            clip_feature(normal.sample(r))
        };
    }
    let openness = clip_feature(normal.sample(r));
    let land_use = if r.random::<f64>() < config.commercial_share { LandUse::Commercial } else { LandUse::Residential };
    SceneSpec { features, openness, land_use, community_id: community_id.to_string(), tier, seed: r.random() }
}

struct Block {
    community: Community,
    images: Vec<ImageRecord>,
    ratings: Vec<RatingRecord>,
    triplets: Vec<QATriplet>,
}

fn gen_community(
    index: usize,
    config: &GenConfig,
    effects: &EffectModel,
    profiles: &[RespondentProfile],
    registry: &DimensionRegistry,
) -> Result<Block> {
    let community_id = format!("c{index:03}");
    let mut r = rng::stream(config.seed, rng::key_stream(&community_id));
    let tier = (index % TIERS) as u8;
    let (lo, hi) = TIER_BANDS[tier as usize];
    let price = r.random_range(lo..hi).round().min(hi - 1.0);
    let side = (config.communities as f64).sqrt().ceil() as usize;
    let (lat0, lon0) = (ORIGIN.0 + 0.02 * (index / side) as f64, ORIGIN.1 + 0.03 * (index % side) as f64);
    let community = Community { community_id: community_id.clone(), price_per_sqm: price, lat: lat0, lon: lon0 };

    let per_lon = METERS_PER_DEGREE * lat0.to_radians().cos();
    let lattice = (config.images_per_community as f64).sqrt().ceil() as usize;
    let mut block = Block { community, images: Vec::new(), ratings: Vec::new(), triplets: Vec::new() };
    for j in 0..config.images_per_community {
        let image_id = format!("{community_id}-i{j:04}");
        let spec = draw_scene(config, &community_id, tier, &mut r);
        let raster = render_scene(&spec)?;
        let mut jitter = || r.random_range(-config.jitter_m..=config.jitter_m);
        let north = (j / lattice) as f64 * config.spacing_m + jitter();
        let east = (j % lattice) as f64 * config.spacing_m + jitter();
        let image = ImageRecord {
            image_id: image_id.clone(),
            community_id: community_id.clone(),
            lat: lat0 + north / METERS_PER_DEGREE,
            lon: lon0 + east / per_lon,
            capture_time: EPOCH + index as i64 * 86_400 + j as i64 * 60,
            price_per_sqm: price,
            tier,
            height: raster.height,
            width: raster.width,
            pixels: raster.pixels.iter().map(|p| quantize(*p)).collect(),
            features: spec.feature_map(),
            openness: spec.openness,
            land_use: spec.land_use,
            satisfaction: Some(plant_satisfaction(&spec, effects, spec.seed)),
        };
        let truth = truth_scores(&image);

        for k in sample(&mut r, profiles.len(), config.raters_per_image).into_iter() {
            let profile = &profiles[k];
            for dim in SUBJECTIVE {
                let z: f64 = StandardNormal.sample(&mut r);
                let skipped = r.random::<f64>() < profile.skip_prob;
                block.ratings.push(RatingRecord {
                    respondent_id: profile.respondent_id.clone(),
                    image_id: image_id.clone(),
                    dimension: dim.to_string(),
                    score: (!skipped).then(|| respond(profile, truth[dim], config.rating_noise_sd * z)),
                    skipped,
                });
            }
        }

        let answer = |dim: &str, split: Split, alternate: bool| {
            let d = registry.get(dim).expect("default registry covers every dimension");
            let score = ((truth[dim] * 10.0).round() / 10.0).clamp(d.lo, d.hi);
            let text = if alternate { alternate_answer(dim, score, d.lo, d.hi) } else { answer_text(dim, score, d.lo, d.hi) };
            QATriplet {
                image_id: image_id.clone(),
                question: question(dim).to_string(),
                answer_score: Some(score),
                answer_text: text,
                dimension: dim.to_string(),
                split,
                augmented: false,
            }
        };
        for dim in registry.keys() {
            block.triplets.push(answer(dim, Split::Train, false));
        }
        let keys = registry.keys();
        let picks = sample(&mut r, keys.len(), config.alternates_per_image.min(keys.len()));
        for k in picks.into_iter() {
            block.triplets.push(answer(keys[k], Split::Reserve, true));
        }
        block.images.push(image);
    }
    Ok(block)
}

/// Generates a full corpus. Communities are generated in parallel, each from
/// its own stream keyed by community id, and concatenated in id order.
pub fn gen_corpus(config: &GenConfig) -> Result<Corpus> {
    config.validate()?;
    let effects = config.resolved_effects();
    let profiles = respondent_profiles(config);
    let registry = DimensionRegistry::default();
    let blocks: Vec<Block> = (0..config.communities)
        .into_par_iter()
        .map(|i| gen_community(i, config, &effects, &profiles, &registry))
        .collect::<Result<_>>()?;

    let mut corpus = Corpus {
        communities: Vec::with_capacity(blocks.len()),
        images: Vec::with_capacity(config.image_count()),
        ratings: Vec::new(),
        triplets: Vec::new(),
        manifest: Manifest {
            format: MANIFEST_FORMAT.to_string(),
            seed: config.seed,
            config: config.clone(),
            quad_vertex: effects.quad_peak,
            effects,
            table1_betas: TABLE1_BETAS.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            tier_bands: TIER_BANDS.to_vec(),
            respondents: profiles,
            counts: Counts { communities: 0, images: 0, ratings: 0, triplets: 0 },
            files: BTreeMap::new(),
        },
    };
    for b in blocks {
        corpus.communities.push(b.community);
        corpus.images.extend(b.images);
        corpus.ratings.extend(b.ratings);
        corpus.triplets.extend(b.triplets);
    }
    corpus.manifest.counts = Counts {
        communities: corpus.communities.len(),
        images: corpus.images.len(),
        ratings: corpus.ratings.len(),
        triplets: corpus.triplets.len(),
    };
    Ok(corpus)
}

/// Writes the corpus files into `dir` (which must exist) and returns the
/// manifest's SHA-256.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<String> {
    write_communities(&dir.join(COMMUNITIES_FILE), &corpus.communities)?;
    write_images(&dir.join(IMAGES_FILE), &corpus.images)?;
    write_ratings(&dir.join(RATINGS_FILE), &corpus.ratings)?;
    write_triplets(&dir.join(TRIPLETS_FILE), &corpus.triplets)?;
    let mut manifest = corpus.manifest.clone();
    for name in [COMMUNITIES_FILE, IMAGES_FILE, RATINGS_FILE, TRIPLETS_FILE] {
        manifest.files.insert(name.to_string(), sha256_file(&dir.join(name))?);
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, &text).map_err(|e| DataError::io(&path, e))?;
    Ok(sha256_bytes(text.as_bytes()))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig { communities: 5, images_per_community: 3, respondents: 6, seed: 11, ..GenConfig::default() }
    }

    #[test]
    fn counts_match_config() {
        let c = gen_corpus(&small()).unwrap();
        assert_eq!(c.images.len(), 15);
        assert_eq!(c.ratings.len(), 15 * 2 * 6);
        assert_eq!(c.triplets.len(), 15 * 14);
        assert_eq!(c.manifest.counts.triplets, c.triplets.len());
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(gen_corpus(&small()).unwrap(), gen_corpus(&small()).unwrap());
    }

    #[test]
    fn unbiased_respondents_round_truth() {
        let p = RespondentProfile { respondent_id: "r".into(), bias: 0.0, spread: 1.0, skip_prob: 0.0 };
        assert_eq!(respond(&p, 3.49, 0.0), 3);
        assert_eq!(respond(&p, 3.5, 0.0), 4);
        assert_eq!(respond(&p, 9.0, 0.0), 5);
    }

    #[test]
    fn uniform_quad_expectation() {
        let c = GenConfig { connectivity: ConnectivityDesign::Uniform, ..GenConfig::default() };
        assert!((c.quad_expectation() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(gen_corpus(&GenConfig { communities: 0, ..GenConfig::default() }).is_err());
    }
}
