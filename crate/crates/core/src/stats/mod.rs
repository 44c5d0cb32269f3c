//! Audit statistics: classification metrics, agreement, normality,
//! regression and correlation.

mod agreement;
mod classify;
mod correlation;
mod ols;
mod quantile;
mod range;
mod shapiro;
pub mod special;

use thiserror::Error;

pub use agreement::{agreement_rate, bland_altman, AgreementMode, BlandAltmanResult, LOA_Z};
pub use classify::{precision_recall_f1, tertile_label, tertile_recode, ClassMetrics, ConfusionCounts, F1Report, Tertiles};
pub use correlation::{corr_matrix, mid_ranks, pearson, spearman, CorrMethod, CorrMatrix};
pub use ols::{ols_fit, poly_fit_r2, Coefficient, OlsResult, PolyFit};
pub use quantile::{distribution_summary, quantile, DistributionSummary};
pub use range::{out_of_range_rate, OutOfRange, Range};
pub use shapiro::{shapiro_wilk, ShapiroWilk};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("input error: {0}")]
    Input(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("singular design: column {column} is linearly dependent")]
    Singular { column: String },
    #[error("correlation undefined: column {column} has zero variance")]
    UndefinedCorrelation { column: String },
}

pub type Result<T> = std::result::Result<T, StatsError>;

pub(crate) fn mean<T: crate::Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}
