//! Run configuration (TOML) and path resolution.

use std::path::{Path, PathBuf};

use msef_core::model::{AdapterConfig, ScoreHead};
use msef_core::optim::AdamConfig;
use msef_data::balance::BalanceConfig;
use msef_data::curriculum::CurriculumConfig;
use msef_data::phash::DedupConfig;
use msef_data::synth::{ConnectivityDesign, EffectModel, GenConfig};
use msef_data::DimensionRegistry;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const REPORT_DIR_ENV: &str = "MSEF_REPORT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub curated: PathBuf,
    pub train: PathBuf,
    pub predictions: PathBuf,
    pub report: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "corpus".into(),
            curated: "curated".into(),
            train: "train".into(),
            predictions: "eval/predictions.csv".into(),
            report: "report".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
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
    pub alternates_per_image: usize,
    pub spacing_m: f64,
    pub jitter_m: f64,
    /// When set, the satisfaction noise sd is calibrated so that the true
    /// connectivity curve explains this share of variance.
    pub calibrate_r2: Option<f64>,
    pub calibration_samples: usize,
}

impl Default for GenerateSection {
    fn default() -> Self {
        let g = GenConfig::default();
        Self {
            communities: g.communities,
            images_per_community: g.images_per_community,
            respondents: g.respondents,
            raters_per_image: g.raters_per_image,
            bias_max: g.bias_max,
            spread_lo: g.spread_lo,
            spread_hi: g.spread_hi,
            skip_prob: g.skip_prob,
            rating_noise_sd: g.rating_noise_sd,
            feature_mean: g.feature_mean,
            feature_sd: g.feature_sd,
            connectivity: g.connectivity,
            commercial_share: g.commercial_share,
            alternates_per_image: g.alternates_per_image,
            spacing_m: g.spacing_m,
            jitter_m: g.jitter_m,
            calibrate_r2: None,
            calibration_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tiering {
    /// Equal-frequency quintiles of community price.
    Quintile,
    /// The fixed city thresholds.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationSection {
    pub validation: ValidationMode,
    pub hamming_max: u32,
    pub geo_max_m: f64,
    pub tau: f64,
    pub ngram: usize,
    pub periodic_fraction: f64,
    pub val_fraction: f64,
    pub tiering: Tiering,
    pub balance: BalanceConfig,
}

impl Default for CurationSection {
    fn default() -> Self {
        let d = DedupConfig::default();
        let c = CurriculumConfig::default();
        Self {
            validation: ValidationMode::Strict,
            hamming_max: d.hamming_max,
            geo_max_m: d.geo_max_m,
            tau: c.tau,
            ngram: c.ngram,
            periodic_fraction: c.periodic_fraction,
            val_fraction: 0.2,
            tiering: Tiering::Quintile,
            balance: BalanceConfig::default(),
        }
    }
}

impl CurationSection {
    pub fn dedup(&self) -> DedupConfig {
        DedupConfig { hamming_max: self.hamming_max, geo_max_m: self.geo_max_m }
    }

    pub fn curriculum(&self) -> CurriculumConfig {
        CurriculumConfig { tau: self.tau, ngram: self.ngram, periodic_fraction: self.periodic_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Images whose rationale is regenerated for the curriculum check at the
    /// end of each epoch.
    pub refresh_images: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self { epochs: 2, steps_per_epoch: 20, batch_size: 4, lr: a.lr, beta1: a.beta1, beta2: a.beta2, refresh_images: 8 }
    }
}

impl TrainSection {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, ..AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub repetitions: usize,
    /// Scores at most this many validation images (in id order).
    pub max_images: Option<usize>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { repetitions: 3, max_images: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub figures: bool,
    pub tables: bool,
    /// Half-width of the expected interval around the human score used for
    /// the out-of-range rate and the fuzzy agreement.
    pub tolerance: f64,
    pub histogram_bins: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { figures: true, tables: true, tolerance: 1.0, histogram_bins: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub generate: GenerateSection,
    pub effects: EffectModel,
    pub curation: CurationSection,
    pub model: AdapterConfig,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub report: ReportSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::user(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::user(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn gen_config(&self) -> GenConfig {
        let g = &self.generate;
        GenConfig {
            seed: self.seed,
            communities: g.communities,
            images_per_community: g.images_per_community,
            respondents: g.respondents,
            raters_per_image: g.raters_per_image,
            bias_max: g.bias_max,
            spread_lo: g.spread_lo,
            spread_hi: g.spread_hi,
            skip_prob: g.skip_prob,
            rating_noise_sd: g.rating_noise_sd,
            feature_mean: g.feature_mean,
            feature_sd: g.feature_sd,
            connectivity: g.connectivity,
            commercial_share: g.commercial_share,
            alternates_per_image: g.alternates_per_image,
            spacing_m: g.spacing_m,
            jitter_m: g.jitter_m,
            effects: self.effects.clone(),
        }
    }

    /// The model config with one bounded score head per registry dimension.
    pub fn adapter(&self, registry: &DimensionRegistry) -> AdapterConfig {
        AdapterConfig {
            score_heads: registry.iter().map(|d| ScoreHead::new(&d.key, d.lo, d.hi)).collect(),
            seed: self.model.seed ^ self.seed,
            ..self.model.clone()
        }
    }
}

/// Absolute locations of every pipeline artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub base: PathBuf,
    pub corpus: PathBuf,
    pub curated: PathBuf,
    pub train: PathBuf,
    pub predictions: PathBuf,
    pub report: PathBuf,
}

impl Layout {
    /// Relative paths resolve against `base`; the report directory may be
    /// overridden by `report_override`.
    pub fn new(base: &Path, paths: &Paths, report_override: Option<PathBuf>) -> Self {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        Self {
            base: base.to_path_buf(),
            corpus: at(&paths.corpus),
            curated: at(&paths.curated),
            train: at(&paths.train),
            predictions: at(&paths.predictions),
            report: report_override.map(|p| at(&p)).unwrap_or_else(|| at(&paths.report)),
        }
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.train.join("checkpoint.json")
    }

    /// Path relative to the base directory, for embedding in reports.
    pub fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.base).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("sed = 1").is_err());
        assert!(RunConfig::parse("[train]\nepoch = 3").is_err());
        assert!(RunConfig::parse("[effects]\nnoise = 0.1").is_err());
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::parse(
            "seed = 9\n[generate]\ncommunities = 5\nconnectivity = \"uniform\"\n[effects]\nnoise_sd = 0.0\n[model]\nlora_rank = 4\n[curation.balance]\nmin_share = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.gen_config().communities, 5);
        assert_eq!(c.gen_config().seed, 9);
        assert_eq!(c.gen_config().effects.noise_sd, 0.0);
        assert_eq!(c.model.lora_rank, 4);
        assert_eq!(c.curation.balance.min_share, 0.5);
    }

    #[test]
    fn heads_follow_registry() {
        let a = RunConfig::default().adapter(&DimensionRegistry::default());
        assert_eq!(a.score_heads.len(), 13);
        assert!(a.validate().is_ok());
    }

    #[test]
    fn report_override() {
        let l = Layout::new(Path::new("/w"), &Paths::default(), Some("/elsewhere".into()));
        assert_eq!(l.report, PathBuf::from("/elsewhere"));
        assert_eq!(l.relative(&l.corpus.join("x.csv")), "corpus/x.csv");
    }
}
