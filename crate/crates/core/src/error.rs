use thiserror::Error;

use crate::estimators::SelectionTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate count value j = {j}")]
    DuplicateCount { line: usize, j: u64 },

    #[error("abundance at position {index} must be a positive integer")]
    InvalidAbundance { index: usize },

    #[error("input contains no frequency counts")]
    Empty,

    #[error("frequency table has no entry for j = {0}")]
    MissingCount(u64),

    #[error("insufficient data: {available} ratio points available, at least {required} required")]
    InsufficientData { available: usize, required: usize },

    #[error("model ({p},{q}) needs at least {required} ratio points, got {available}")]
    TooFewPoints {
        p: usize,
        q: usize,
        available: usize,
        required: usize,
    },

    #[error("rational model denominator vanishes at j = {0}")]
    Singularity(f64),

    #[error("normal equations are rank deficient")]
    RankDeficient,

    #[error("fitted denominator is not positive at j = {0}")]
    DenominatorViolation(u64),

    #[error("no admissible model on the ladder ({})", .0.summary())]
    NoAdmissibleModel(SelectionTrace),

    #[error("no singleton count present; use the nof1 estimator instead")]
    MissingSingletons,

    #[error("every simulated count is zero")]
    DegenerateSample,

    #[error("no successful replicates to summarise")]
    NoData,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
