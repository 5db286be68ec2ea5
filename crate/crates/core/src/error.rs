//! Error type shared across the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while validating data, estimating
/// parameters, or generating synthetic samples.
///
/// Variants are deliberately specific: callers (and the CLI) distinguish
/// between *data* problems (bad input), *identifiability* problems (the
/// moment system cannot be solved for this dataset), and *usage* problems
/// (impossible options).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A group with no responses was supplied.
    #[error("group `{id}` has no responses")]
    EmptyGroup { id: String },

    /// The same (row, column) cell appeared twice in a ratings set.
    /// Indices are reported 1-based to match on-disk formats.
    #[error("duplicate rating for cell ({row}, {col})")]
    DuplicateCell { row: usize, col: usize },

    /// A rating referenced a row or column outside the declared grid.
    #[error("cell ({row}, {col}) lies outside the declared {n_rows} x {n_cols} grid")]
    CellOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    /// Groups disagree about how many regressors they carry.
    #[error("group `{id}` has {got} regressors, expected {expected}")]
    RaggedRegressors {
        id: String,
        got: usize,
        expected: usize,
    },

    /// An arrival order was supplied that is not a permutation of the
    /// entry indices.
    #[error("arrival order is not a permutation of 0..{n_entries}")]
    InvalidArrivalOrder { n_entries: usize },

    /// The estimator was asked for regressors the sample does not carry.
    #[error("sample carries no regressors")]
    MissingRegressors,

    /// Too few observations or units to form the requested statistic.
    #[error("need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// The moment equations have no unique solution for this dataset
    /// (for example, every group has exactly one observation).
    #[error("variance components are not identifiable: {0}")]
    Unidentifiable(String),

    /// The moment system is numerically singular.
    #[error("moment system is numerically singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    /// The pooled regressor cross-product matrix is not full rank.
    #[error("regressor matrix is rank deficient")]
    RankDeficient,

    /// Solver or chunking options that can never work.
    #[error("invalid options: {0}")]
    InvalidOptions(String),

    /// More chunks requested than there are independent units.
    #[error("cannot split {units} units into {chunks} chunks")]
    TooManyChunks { chunks: usize, units: usize },

    /// A chunk estimate failed; nothing is averaged in that case.
    #[error("estimation failed on chunk {chunk}: {source}")]
    ChunkEstimationFailed {
        chunk: usize,
        #[source]
        source: Box<Error>,
    },

    /// Standard errors were requested from a single-chunk fit.
    #[error("standard errors require at least 2 chunks, got {chunks}")]
    InsufficientChunks { chunks: usize },

    /// A simulation spec is internally inconsistent.
    #[error("invalid simulation spec: {0}")]
    BadSpec(String),

    /// The simulated inclusion pattern produced no entries at all.
    #[error("simulation produced an empty dataset")]
    DegenerateDraw,
}
