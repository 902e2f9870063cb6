use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operation requires a non-empty point cloud")]
    EmptyCloud,
    #[error("low-resolution cloud is not the downsampling of the high-resolution cloud")]
    InconsistentPair,
    #[error("interpolation pattern mask is zero (every parent must keep at least one child)")]
    InvalidPattern,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("coordinate {coord} does not fit octree depth {depth}")]
    DepthOverflow { coord: u32, depth: u8 },
    #[error("corrupt base payload: {0}")]
    CorruptStream(&'static str),
    #[error("bad container magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("container truncated")]
    TruncatedStream,
    #[error("network parameter is not finite")]
    NonFiniteParam,
    #[error("downsampling exponent K={k} must satisfy 1 <= K < bit depth {bit_depth}")]
    InvalidK { k: u8, bit_depth: u8 },
    #[error("stream carries an external base payload; decode it with the external tool")]
    ExternalBase,
    #[error("rate-distortion curves have no overlapping quality range")]
    NoOverlap,
    #[error("rate-distortion curve needs at least 4 usable points")]
    InsufficientPoints,
    #[error("division by zero (empty original cloud)")]
    DivisionByZero,
    #[error("neighborhood radius D={0} is unsupported (must be 1 or 2)")]
    InvalidRadius(u8),
    #[error("hidden width {0} is out of range (must be in [1, 64])")]
    InvalidHidden(u16),
    #[error("malformed rate-distortion csv: {0}")]
    BadCsv(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
