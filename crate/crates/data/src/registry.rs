//! Rated dimensions and their score ranges.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionKind {
    Subjective,
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub key: String,
    pub kind: DimensionKind,
    pub lo: f64,
    pub hi: f64,
    /// Scored dimensions require a numeric answer on every triplet.
    pub scored: bool,
}

impl Dimension {
    pub fn contains(&self, score: f64) -> bool {
        score >= self.lo && score <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRegistry {
    dims: Vec<Dimension>,
}

pub const SUBJECTIVE: [&str; 6] = [
    "accessibility",
    "cleanliness",
    "perceived_safety",
    "visual_richness",
    "commercial_convenience",
    "overall_satisfaction",
];

pub const OBJECTIVE: [&str; 7] = [
    "sidewalk_width",
    "roadway_width",
    "greening_level",
    "motorization",
    "commercial_density",
    "sky_openness",
    "public_facilities",
];

impl Default for DimensionRegistry {
    /// Six survey dimensions on the 1–5 Likert scale and seven coded
    /// attributes on the 1–7 feature scale.
    fn default() -> Self {
        let mut dims: Vec<Dimension> = SUBJECTIVE
            .iter()
            .map(|k| Dimension { key: k.to_string(), kind: DimensionKind::Subjective, lo: 1.0, hi: 5.0, scored: true })
            .collect();
        dims.extend(
            OBJECTIVE
                .iter()
                .map(|k| Dimension { key: k.to_string(), kind: DimensionKind::Objective, lo: 1.0, hi: 7.0, scored: true }),
        );
        Self { dims }
    }
}

impl DimensionRegistry {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, String> {
        for (i, d) in dims.iter().enumerate() {
            if dims[..i].iter().any(|o| o.key == d.key) {
                return Err(format!("duplicate dimension {}", d.key));
            }
            if !(d.lo < d.hi) {
                return Err(format!("dimension {} has empty range [{}, {}]", d.key, d.lo, d.hi));
            }
        }
        Ok(Self { dims })
    }

    /// The subjective part of the default registry.
    pub fn subjective() -> Self {
        let all = Self::default();
        Self { dims: all.dims.into_iter().filter(|d| d.kind == DimensionKind::Subjective).collect() }
    }

    pub fn get(&self, key: &str) -> Option<&Dimension> {
        self.dims.iter().find(|d| d.key == key)
    }

    pub fn position(&self, key: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.key == key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Dimension> {
        self.dims.iter()
    }

    pub fn keys(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.key.as_str()).collect()
    }

    pub fn of_kind(&self, kind: DimensionKind) -> Vec<&Dimension> {
        self.dims.iter().filter(|d| d.kind == kind).collect()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_shape() {
        let r = DimensionRegistry::default();
        assert_eq!(r.len(), 13);
        assert_eq!(r.of_kind(DimensionKind::Subjective).len(), 6);
        assert_eq!(r.get("greening_level").unwrap().hi, 7.0);
        assert_eq!(r.get("perceived_safety").unwrap().hi, 5.0);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let d = Dimension { key: "a".into(), kind: DimensionKind::Objective, lo: 1.0, hi: 5.0, scored: true };
        assert!(DimensionRegistry::new(vec![d.clone(), d]).is_err());
    }
}
