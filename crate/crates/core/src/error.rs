use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    /// The Nadir value does not strictly dominate an objective.
    #[error("nadir {nadir} does not dominate objective {index} (value {value})")]
    DominanceViolation {
        index: usize,
        nadir: f64,
        value: f64,
    },

    #[error("slack must be positive, got {0}")]
    NonPositiveSlack(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A loss or gradient came out non-finite.
    #[error("numerical instability: {0}")]
    Numerical(String),

    #[error("bad IDX magic number {0:#010x}, expected 0x00000803")]
    BadMagic(u32),

    #[error("truncated IDX file: {0}")]
    TruncatedFile(String),

    #[error("invalid downsample factor {factor} for {side}x{side} images")]
    InvalidFactor { factor: usize, side: usize },

    #[error("wrong row count for {what}: expected {expected}, got {got}")]
    RowCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("paired configurations differ beyond the objective: {0}")]
    ConfigMismatch(String),

    #[error("runs are not paired: {0}")]
    Unpaired(String),

    #[error("paired differences have zero variance")]
    ZeroVariance,

    /// A training-time invariant failed (e.g. mu not above the batch maximum).
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
