//! Back-translation probing of implied gender in machine translation.
//!
//! English prompts containing a source pronoun are translated into a pivot
//! language whose third-person pronoun carries no gender, then back into
//! English, many times over. The pronoun chosen on the way back is extracted
//! and the per-sentence spread of choices is scored with the adjusted
//! unalikeability coefficient (UCA). Verb-group ANOVA / Tukey tests and
//! cross-run correlation are provided for driver and reproducibility studies.
//!
//! The numerical core ([`metrics`], [`stats`]) is generic over the scalar
//! type; the aliases below fix the types used by the pipeline.

pub mod analysis;
pub mod clock;
pub mod corpus;
pub mod extract;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod scalar;
pub mod stats;
pub mod translate;

pub use corpus::{Corpus, PromptSentence};
pub use extract::{extract_pronoun, PronounCategory};
pub use metrics::{uc, uc_max, uca, PronounTally, VariationScore};
pub use runner::{Dataset, TrialRecord};
pub use scalar::Scalar;

/// Exact rational scalar used for oracle-grade metric evaluation.
pub type Exact = num_rational::Ratio<i128>;

/// Variation score in double precision, as used throughout the pipeline.
pub type Score = metrics::VariationScore<f64>;
/// Variation score with exact rational components.
pub type ExactScore = metrics::VariationScore<Exact>;
pub type Summary = stats::SummaryStats<f64>;
pub type Anova = stats::AnovaResult<f64>;
pub type Tukey = stats::TukeyResult<f64>;

/// Normalisation category count used when none is given.
pub const DEFAULT_K: usize = 7;
