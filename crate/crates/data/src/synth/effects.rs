use std::collections::BTreeMap;

use msef_core::rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::records::{LandUse, FEATURES, FEATURE_HI, FEATURE_LO};

pub const CONNECTIVITY: usize = 8;

/// Linear effects of the Table-1 predictors on street satisfaction.
pub const TABLE1_BETAS: [(&str, f64); 8] = [
    ("pedestrian_width", 0.419),
    ("greenery", 0.444),
    ("public_amenities", 0.346),
    ("visual_richness", 0.483),
    ("perceived_safety", 0.486),
    ("motorization", -0.437),
    ("vehicle_lane_width", -0.506),
    ("commercial_intensity", -0.392),
];

/// One street scene to render and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Values in [`FEATURES`] order.
    pub features: [f64; 9],
    pub openness: f64,
    pub land_use: LandUse,
    pub community_id: String,
    pub tier: u8,
    pub seed: u64,
}

impl SceneSpec {
    pub fn uniform(value: f64, seed: u64) -> Self {
        Self {
            features: [value; 9],
            openness: value,
            land_use: LandUse::Residential,
            community_id: "c000".into(),
            tier: 0,
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let named = FEATURES.iter().copied().zip(self.features).chain(std::iter::once(("openness", self.openness)));
        for (name, v) in named {
            if !(FEATURE_LO..=FEATURE_HI).contains(&v) {
                return Err(DataError::Input(format!("feature {name} = {v} outside [{FEATURE_LO}, {FEATURE_HI}]")));
            }
        }
        Ok(())
    }

    pub fn feature_map(&self) -> BTreeMap<String, f64> {
        FEATURES.iter().zip(self.features).map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectModel {
    pub intercept: f64,
    /// Linear effect per feature name; features not listed have none.
    pub betas: BTreeMap<String, f64>,
    /// Features enter as deviations from this value.
    pub center: f64,
    /// Curvature of the inverted-U in connectivity.
    pub quad_gamma: f64,
    pub quad_peak: f64,
    /// Subtracted from `(c − peak)²`; `None` uses its expectation under the
    /// corpus design.
    pub quad_center: Option<f64>,
    pub openness_beta_commercial: f64,
    pub openness_beta_residential: f64,
    pub noise_sd: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

impl Default for EffectModel {
    fn default() -> Self {
        Self {
            intercept: 4.0,
            betas: TABLE1_BETAS.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            center: 4.0,
            quad_gamma: 0.2,
            quad_peak: 5.0,
            quad_center: None,
            openness_beta_commercial: 0.3,
            openness_beta_residential: 0.0,
            noise_sd: 0.5,
            clip_lo: FEATURE_LO,
            clip_hi: FEATURE_HI,
        }
    }
}

impl EffectModel {
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.betas.keys().find(|k| !FEATURES.contains(&k.as_str())) {
            return Err(DataError::Input(format!("effect on unknown feature {k}")));
        }
        if !(self.noise_sd >= 0.0) || !(self.clip_lo < self.clip_hi) {
            return Err(DataError::Input("noise sd must be ≥ 0 and the clip range nonempty".into()));
        }
        Ok(())
    }

    /// The inverted-U term alone.
    pub fn quad_term(&self, connectivity: f64) -> f64 {
        -self.quad_gamma * ((connectivity - self.quad_peak).powi(2) - self.quad_center.unwrap_or(0.0))
    }

    /// Satisfaction before noise and clipping.
    pub fn deterministic(&self, spec: &SceneSpec) -> f64 {
        let linear: f64 = FEATURES
            .iter()
            .zip(spec.features)
            .map(|(k, v)| self.betas.get(*k).copied().unwrap_or(0.0) * (v - self.center))
            .sum();
        let open_beta = match spec.land_use {
            LandUse::Commercial => self.openness_beta_commercial,
            LandUse::Residential => self.openness_beta_residential,
        };
        self.intercept + linear + self.quad_term(spec.features[CONNECTIVITY]) + open_beta * (spec.openness - self.center)
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.clip_lo, self.clip_hi)
    }
}

/// Planted satisfaction: deterministic part plus Gaussian noise drawn from
/// `seed`, clipped to the score range.
pub fn plant_satisfaction(spec: &SceneSpec, effects: &EffectModel, seed: u64) -> f64 {
    let z: f64 = StandardNormal.sample(&mut rng::stream(seed, rng::key_stream("satisfaction")));
    effects.clip(effects.deterministic(spec) + effects.noise_sd * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> EffectModel {
        EffectModel { noise_sd: 0.0, ..EffectModel::default() }
    }

    #[test]
    fn midpoint_scene_gives_intercept() {
        let fx = EffectModel { quad_gamma: 0.0, openness_beta_commercial: 0.0, ..quiet() };
        assert_eq!(plant_satisfaction(&SceneSpec::uniform(4.0, 1), &fx, 1), 4.0);
    }

    #[test]
    fn motorization_lowers_satisfaction() {
        let fx = quiet();
        let mut s = SceneSpec::uniform(4.0, 0);
        let mut last = f64::INFINITY;
        for m in [1.0, 2.5, 4.0, 5.5, 7.0] {
            s.features[5] = m;
            let v = plant_satisfaction(&s, &fx, 0);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn connectivity_peaks_at_five() {
        let fx = quiet();
        let mut s = SceneSpec::uniform(4.0, 0);
        let sweep: Vec<f64> = (0..=12)
            .map(|i| {
                s.features[CONNECTIVITY] = 1.0 + 0.5 * i as f64;
                plant_satisfaction(&s, &fx, 0)
            })
            .collect();
        let best = (0..sweep.len()).fold(0, |b, i| if sweep[i] > sweep[b] { i } else { b });
        assert_eq!(1.0 + 0.5 * best as f64, 5.0);
    }

    #[test]
    fn out_of_range_feature_rejected() {
        let mut s = SceneSpec::uniform(4.0, 0);
        s.features[2] = 7.5;
        assert!(s.check().is_err());
    }
}
