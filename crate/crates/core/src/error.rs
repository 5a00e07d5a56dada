use thiserror::Error;

/// Errors raised while loading codes, models and configurations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid base graph: {0}")]
    BaseGraph(String),
    #[error("lifting factor must be positive, got {0}")]
    LiftingFactor(i64),
    #[error("precode parity submatrix is singular for Z={0}")]
    SingularPrecode(usize),
    #[error("rate index {index} out of range (ladder has {len} rates)")]
    RateIndex { index: usize, len: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("QPSK needs an even number of transmitted bits, got {0}")]
    OddQpskLength(usize),
    #[error("model fingerprint {model} does not match code fingerprint {code}")]
    Fingerprint { model: String, code: String },
    #[error("model file: {0}")]
    Model(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid parameter tying: {0}")]
    Tying(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
