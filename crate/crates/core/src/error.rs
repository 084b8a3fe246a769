use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all homogeneous coordinates vanish")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projection to the hyperplane t = 0 is undefined at [0:…:0:1]")]
    ProjectionUndefined,
    #[error("all image coordinates vanish (indeterminacy point)")]
    IndeterminacyHit,
    #[error("point is not on the surface w_1 = … = w_(k-1) (deviation {0:e})")]
    NotInW(f64),
    #[error("chart coordinate {chart} vanishes at this point")]
    ChartSingular { chart: usize },
    #[error("|lambda| = {0} is outside the admissible range 0 < |lambda| < 1/4")]
    LambdaOutOfRange(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("trap violation: image ratio {ratio:e} at {witness}")]
    TrapViolation { ratio: f64, witness: String },
    #[error("invalid prehistory: f(x_-{index}) misses x_-{prev} by {residual:e}", prev = .index - 1)]
    InvalidPrehistory { index: usize, residual: f64 },
    #[error("prehistory has depth 0 and cannot be unlifted")]
    DepthExhausted,
    #[error("point is not periodic of period {period} (residual {residual:e})")]
    NotPeriodic { period: usize, residual: f64 },
    #[error("cylinder index {index} exceeds prehistory depth {depth}")]
    IndexBeyondDepth { index: usize, depth: usize },
    #[error("preimage tree with {0} leaves is too large to enumerate")]
    TreeTooLarge(u64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("residual {residual:e} is within the arithmetic noise floor {floor:e}")]
    PrecisionInsufficient { residual: f64, floor: f64 },
    #[error("insufficient samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("found {found} periodic points, expected {expected}")]
    IncompleteEnumeration { found: usize, expected: usize },
    #[error("every Bowen ball is empty at this resolution ({0} centers)")]
    EmptyBall(usize),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
