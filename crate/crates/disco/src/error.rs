//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by distance computations, decompositions, and the CLI layer.
#[derive(Debug, Error)]
pub enum DiscoError {
    #[error("index alpha {0} outside the valid range (0, 2]")]
    InvalidAlpha(f64),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("index {index} out of range for {n} observations")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("index sets overlap; d_alpha requires disjoint samples")]
    OverlappingIndexSets,

    #[error("size mismatch: {expected} observations expected, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("empty data: at least one observation required")]
    EmptyData,

    #[error("grouping needs at least 2 groups, got {0}")]
    TooFewGroups(usize),

    #[error("need at least K+1 = {required} observations for K = {groups} groups, got {n}")]
    TooFewObservations {
        required: usize,
        groups: usize,
        n: usize,
    },

    #[error("degenerate within-dispersion: W = 0 with S > 0, F-ratio undefined")]
    DegenerateWithin,

    #[error("all observations identical: T = 0, decomposition undefined")]
    AllIdentical,

    #[error("formula syntax error at position {position}: {message}")]
    FormulaSyntax { position: usize, message: String },

    #[error("duplicate response column '{0}'")]
    DuplicateResponse(String),

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("factor '{0}' has fewer than 2 observed levels")]
    SingleLevelFactor(String),

    #[error("design leaves no residual degrees of freedom (df = {0})")]
    NoResidualDf(i64),

    #[error(
        "internal consistency failure: component '{term}' is {value}, \
         below the -1e-9*T nonnegativity bound"
    )]
    NegativeComponent { term: String, value: f64 },

    #[error("interaction '{term}' has {observed} observed cells; incomplete crossing \
             cannot support the requested interaction")]
    IncompleteInteraction { term: String, observed: usize },

    #[error("replicate count must be at least 1")]
    NoReplicates,

    #[error("significance level {0} outside the supported range (0, 0.215]")]
    InvalidLevel(f64),

    #[error("sigma must be nonnegative, got {0}")]
    NegativeSigma(f64),

    #[error("no observations in data file (header only)")]
    NoObservations,

    #[error("cannot parse '{value}' as a number at row {row}, column '{col}'")]
    BadNumericCell {
        value: String,
        row: usize,
        col: String,
    },

    #[error("missing value at row {row}, column '{col}'")]
    MissingValue { row: usize, col: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DiscoError {
    /// CLI exit code: 2 for data/ingestion problems, 3 for model or design
    /// problems. Usage errors (exit 1) are handled by the argument parser.
    pub fn exit_code(&self) -> i32 {
        use DiscoError::*;
        match self {
            NonFiniteInput { .. } | EmptyData | NoObservations | BadNumericCell { .. }
            | MissingValue { .. } | Csv(_) | Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, DiscoError>;
