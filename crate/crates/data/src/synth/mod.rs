//! Procedural streetscape corpora with planted ground truth.

pub mod calibrate;
pub mod corpus;
pub mod effects;
pub mod plant;
pub mod render;
pub mod text;

pub use calibrate::{calibrate_noise, Calibration};
pub use corpus::{
    gen_corpus, read_manifest, respond, respondent_profiles, to_likert, truth_scores, write_corpus, ConnectivityDesign,
    Corpus, GenConfig, Manifest, RespondentProfile,
};
pub use effects::{plant_satisfaction, EffectModel, SceneSpec, TABLE1_BETAS};
pub use render::{band_mean, render_scene};
pub use plant::{plant_duplicates, PlantKind, Planted};
