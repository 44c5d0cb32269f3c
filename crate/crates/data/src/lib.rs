//! Corpus records, curation stages and the synthetic corpus generator.

pub mod balance;
pub mod curriculum;
pub mod error;
pub mod io;
pub mod likert;
pub mod phash;
pub mod records;
pub mod registry;
pub mod scrub;
pub mod synth;
pub mod tiers;
pub mod validate;

pub use error::{DataError, Result};
pub use records::{Community, ImageRecord, LandUse, QATriplet, RatingRecord, Split};
pub use registry::{Dimension, DimensionKind, DimensionRegistry};
