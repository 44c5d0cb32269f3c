//! Corpus record types.

use std::collections::BTreeMap;
use std::fmt;

use msef_core::GrayImage;
use serde::{Deserialize, Serialize};

/// The nine objective scene features, each on a 1–7 scale.
pub const FEATURES: [&str; 9] = [
    "pedestrian_width",
    "greenery",
    "public_amenities",
    "visual_richness",
    "perceived_safety",
    "motorization",
    "vehicle_lane_width",
    "commercial_intensity",
    "connectivity",
];

pub const FEATURE_LO: f64 = 1.0;
pub const FEATURE_HI: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Reserve,
}

impl Split {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "val" => Some(Self::Val),
            "reserve" => Some(Self::Reserve),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Val => "val",
            Self::Reserve => "reserve",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One image–question–answer sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QATriplet {
    pub image_id: String,
    pub question: String,
    pub answer_score: Option<f64>,
    pub answer_text: String,
    pub dimension: String,
    pub split: Split,
    #[serde(default)]
    pub augmented: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandUse {
    Residential,
    Commercial,
}

/// A geotagged streetscape with its coded attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub community_id: String,
    pub lat: f64,
    pub lon: f64,
    /// Unix seconds.
    pub capture_time: i64,
    pub price_per_sqm: f64,
    pub tier: u8,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
    pub features: BTreeMap<String, f64>,
    pub openness: f64,
    pub land_use: LandUse,
    /// Street satisfaction on the feature scale, when surveyed.
    pub satisfaction: Option<f64>,
}

impl ImageRecord {
    pub fn image(&self) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|p| f64::from(*p) / 255.0).collect(),
        }
    }

    pub fn feature(&self, name: &str) -> f64 {
        self.features[name]
    }

    pub fn coordinates_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// One respondent's Likert answer; skipped answers carry no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub respondent_id: String,
    pub image_id: String,
    pub dimension: String,
    pub score: Option<u8>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub community_id: String,
    pub price_per_sqm: f64,
    pub lat: f64,
    pub lon: f64,
}

/// 8-bit quantization used for stored rasters.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}
