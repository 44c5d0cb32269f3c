//! Batch driver: generate, curate, train, evaluate and audit.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Layout, RunConfig, REPORT_DIR_ENV};
use error::Result;

#[derive(Debug, Parser)]
#[command(name = "msef", version, about = "Street evaluation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with planted effects.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Create the output directory when missing.
        #[arg(long)]
        create: bool,
    },
    /// Validate, scrub, deduplicate, normalize, balance and split.
    Curate {
        #[command(flatten)]
        common: Common,
    },
    /// Fine-tune the adapter on the curated training split.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the last checkpoint.
        #[arg(long)]
        resume: bool,
    },
    /// Score the validation split.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Compute the audit report, figures and tables.
    Audit {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Base directory for every artifact; defaults to the config file's
    /// directory, or the working directory without a config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<(RunConfig, Layout)> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let base = match (&self.out, &self.config) {
            (Some(out), _) => out.clone(),
            (None, Some(p)) => p.parent().map(|d| d.to_path_buf()).unwrap_or_default(),
            (None, None) => PathBuf::from("."),
        };
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        let report = std::env::var_os(REPORT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let layout = Layout::new(&base, &config.paths, report);
        Ok((config, layout))
    }
}

/// Runs one subcommand and returns its human-readable summary.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Generate { common, create } => {
            let (config, layout) = common.resolve()?;
            let s = commands::generate::run(&config, &layout, *create)?;
            Ok(format!(
                "generated {} communities, {} images, {} ratings, {} triplets (noise sd {:.4})\nmanifest sha256 {}",
                s.communities, s.images, s.ratings, s.triplets, s.noise_sd, s.manifest_sha256
            ))
        }
        Command::Curate { common } => {
            let (config, layout) = common.resolve()?;
            let s = commands::curate::run(&config, &layout)?;
            Ok(format!(
                "curated {} of {} triplets: {} invalid, {} redactions, {} duplicate images removed, {} augmented\nsplit: {} train / {} val communities",
                s.triplets_out, s.triplets_in, s.invalid, s.redactions, s.duplicates_removed, s.augmented,
                s.train_communities, s.val_communities
            ))
        }
        Command::Train { common, resume } => {
            let (config, layout) = common.resolve()?;
            let s = commands::train::run(&config, &layout, *resume)?;
            let loss = |l: Option<f64>| l.map(|v| format!("{v:.5}")).unwrap_or_else(|| "n/a".into());
            Ok(format!(
                "trained steps {}..{}: loss {} -> {}, {} promotions, trainable fraction {:.4}\nfrozen weights {}",
                s.start_step, s.end_step, loss(s.first_loss), loss(s.last_loss), s.promotions, s.trainable_fraction,
                s.frozen_after
            ))
        }
        Command::Evaluate { common } => {
            let (config, layout) = common.resolve()?;
            let s = commands::evaluate::run(&config, &layout)?;
            Ok(format!(
                "evaluated {} images, {} predictions (max repetition sd {:.3e})",
                s.images, s.rows, s.max_repetition_sd
            ))
        }
        Command::Audit { common } => {
            let (config, layout) = common.resolve()?;
            let s = commands::audit::run(&config, &layout)?;
            let mut text = format!("wrote {} with {} figures", s.report.display(), s.figures);
            for o in &s.omitted {
                text.push_str(&format!("\nomitted {o}"));
            }
            Ok(text)
        }
    }
}
