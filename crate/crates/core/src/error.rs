use thiserror::Error;

/// Errors produced by construction, simulation and reconstruction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("invalid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("displacement amplitude |gamma| = {abs:.3} exceeds the supported range (max 10)")]
    DisplacementOutOfRange { abs: f64 },

    #[error("dimension policy violation: {reason}")]
    DimensionPolicy { reason: String },

    #[error("working dimension {n_work} is insufficient for |gamma| = {abs_gamma:.3} at n_tr = {n_tr} (POVM spectrum exceeds [0, 1] by more than 1e-8)")]
    InsufficientPadding {
        n_tr: usize,
        n_work: usize,
        abs_gamma: f64,
    },

    #[error("invalid measurement setting: {reason}")]
    InvalidSetting { reason: String },

    #[error("measurement plan is empty")]
    EmptyPlan,

    #[error("no eigenvalue of the transfer function exceeds the retention threshold")]
    EmptySubspace,

    #[error("probability {value:.6e} is outside [0, 1] beyond tolerance")]
    NonPhysicalProbability { value: f64 },

    #[error("data/model incompatibility: p_{index} = 0 while N_{index} > 0")]
    IncompatibleData { index: usize },

    #[error("invalid counts: {reason}")]
    InvalidCounts { reason: String },

    #[error(
        "likelihood decreased by {decrease:.3e} at iteration {iteration} despite dilution"
    )]
    MonotonicityFailure { iteration: usize, decrease: f64 },

    #[error("pointwise inversion needs at least 2 distinct efficiencies, got {count}")]
    TooFewEfficiencies { count: usize },

    #[error("pointwise inversion received all-zero data")]
    AllZeroData,

    #[error("quadrature grid too coarse: back-transformed trace {trace:.4} deviates from 1 by more than 0.05")]
    GridTooCoarse { trace: f64 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
