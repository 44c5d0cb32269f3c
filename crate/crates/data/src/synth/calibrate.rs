use msef_core::rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::corpus::{draw_scene, GenConfig};
use super::effects::CONNECTIVITY;
use crate::error::{DataError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub noise_sd: f64,
    pub oracle_r2: f64,
    pub samples: usize,
}

struct Draws {
    deterministic: Vec<f64>,
    quad: Vec<f64>,
    z: Vec<f64>,
}

fn draws(config: &GenConfig, samples: usize) -> Draws {
    let fx = config.resolved_effects();
    let mut r = rng::stream(config.seed, rng::key_stream("calibration"));
    let mut d = Draws { deterministic: Vec::with_capacity(samples), quad: Vec::with_capacity(samples), z: Vec::with_capacity(samples) };
    for _ in 0..samples {
        let spec = draw_scene(config, "calibration", 0, &mut r);
        d.deterministic.push(fx.deterministic(&spec));
        d.quad.push(fx.quad_term(spec.features[CONNECTIVITY]));
        d.z.push(StandardNormal.sample(&mut r));
    }
    d
}

/// Share of satisfaction variance explained by the true connectivity curve
/// when the noise sd is `sd`. The same draws are reused for every `sd`, so
/// the result is monotone in it.
fn oracle_r2(config: &GenConfig, d: &Draws, sd: f64) -> f64 {
    let fx = &config.effects;
    let s: Vec<f64> = d.deterministic.iter().zip(&d.z).map(|(det, z)| fx.clip(det + sd * z)).collect();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let offset = s.iter().zip(&d.quad).map(|(s, q)| s - q).sum::<f64>() / n;
    let sse: f64 = s.iter().zip(&d.quad).map(|(s, q)| (s - offset - q).powi(2)).sum();
    let sst: f64 = s.iter().map(|s| (s - mean).powi(2)).sum();
    1.0 - sse / sst
}

/// Bisects the noise sd so that the oracle R² of the connectivity curve
/// equals `target`.
pub fn calibrate_noise(config: &GenConfig, target: f64, samples: usize) -> Result<Calibration> {
    config.validate()?;
    if !(target > 0.0 && target < 1.0) || samples < 10 {
        return Err(DataError::Input("target R² must be in (0, 1) with at least 10 samples".into()));
    }
    let d = draws(config, samples);
    let ceiling = oracle_r2(config, &d, 0.0);
    if ceiling < target {
        return Err(DataError::Input(format!(
            "target R² {target} unreachable: noiseless oracle R² is {ceiling:.4}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while oracle_r2(config, &d, hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(DataError::Input("noise calibration diverged".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if oracle_r2(config, &d, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let noise_sd = 0.5 * (lo + hi);
    Ok(Calibration { noise_sd, oracle_r2: oracle_r2(config, &d, noise_sd), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::corpus::ConnectivityDesign;

    fn quad_design() -> GenConfig {
        GenConfig { connectivity: ConnectivityDesign::Uniform, feature_sd: 0.3, ..GenConfig::default() }
    }

    #[test]
    fn hits_target() {
        let c = calibrate_noise(&quad_design(), 0.49, 4000).unwrap();
        assert!((c.oracle_r2 - 0.49).abs() < 1e-6);
        assert!(c.noise_sd > 0.0);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let c = GenConfig { feature_sd: 2.0, ..GenConfig::default() };
        assert!(calibrate_noise(&c, 0.95, 1000).is_err());
    }
}
