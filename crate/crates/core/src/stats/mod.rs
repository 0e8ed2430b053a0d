//! Statistical machinery: summaries with type-7 quantiles, Pearson
//! correlation, one-way ANOVA, and Tukey–Kramer comparisons with p-values
//! from the studentized range distribution.
//!
//! Everything here is generic over `num_traits::Float`.

mod anova;
mod correlation;
mod distributions;
pub mod quadrature;
pub mod special;
mod summary;

use num_traits::FromPrimitive;
use thiserror::Error;

pub use anova::{anova_oneway, tukey_hsd, AnovaResult, TukeyComparison, TukeyResult};
pub use correlation::pearson;
pub use distributions::{f_survival, studentized_range_cdf, studentized_range_sf};
pub use special::incomplete_beta_regularized;
pub use summary::{quantile_type7, summarize, SummaryStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("{total} values in {groups} groups leaves no within-group degrees of freedom")]
    NoWithinDf { total: usize, groups: usize },
    #[error("{labels} labels for {groups} groups")]
    LabelMismatch { labels: usize, groups: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// f64 literal in the generic float type.
pub(crate) fn lit<F: FromPrimitive>(x: f64) -> F {
    F::from_f64(x).expect("float literal not representable")
}
