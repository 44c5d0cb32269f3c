use msef_data::synth::{calibrate_noise, gen_corpus, write_corpus};

use super::ensure_dir;
use crate::config::{Layout, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub communities: usize,
    pub images: usize,
    pub ratings: usize,
    pub triplets: usize,
    pub noise_sd: f64,
    pub manifest_sha256: String,
}

/// Writes a synthetic corpus. The corpus directory must exist unless
/// `create` is set.
pub fn run(config: &RunConfig, layout: &Layout, create: bool) -> Result<GenerateSummary> {
    if !layout.corpus.is_dir() {
        if create {
            ensure_dir(&layout.corpus)?;
        } else {
            return Err(CliError::user(format!(
                "output directory {} does not exist (pass --create to make it)",
                layout.corpus.display()
            )));
        }
    }
    let mut gen = config.gen_config();
    if let Some(target) = config.generate.calibrate_r2 {
        let cal = calibrate_noise(&gen, target, config.generate.calibration_samples)?;
        gen.effects.noise_sd = cal.noise_sd;
    }
    let corpus = gen_corpus(&gen)?;
    let manifest_sha256 = write_corpus(&layout.corpus, &corpus)?;
    let c = &corpus.manifest.counts;
    Ok(GenerateSummary {
        communities: c.communities,
        images: c.images,
        ratings: c.ratings,
        triplets: c.triplets,
        noise_sd: gen.effects.noise_sd,
        manifest_sha256,
    })
}
