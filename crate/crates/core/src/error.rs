use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular matrix over F2")]
    Singular,
    #[error("no invertible matrix after {0} draws")]
    RetriesExhausted(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("linear program is {0}")]
    LpStatus(&'static str),
    #[error("enumeration size {size} exceeds guard {guard}")]
    GuardExceeded { size: u128, guard: u128 },
    #[error("every budget in the sweep failed")]
    SweepFailed,
    #[error("no candidate accepted")]
    NoCandidate,
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("malformed json: {0}")]
    Json(String),
    #[error("prime pool is empty")]
    EmptyPool,
}

pub type Result<T> = std::result::Result<T, Error>;
