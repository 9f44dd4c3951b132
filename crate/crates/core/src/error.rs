use thiserror::Error;

/// Errors raised anywhere in the key-rate pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode `{0}` is not in the registry")]
    UnknownMode(String),

    #[error("mode label `{0}` appears more than once")]
    DuplicateMode(String),

    #[error("invalid cutoff {cutoff} for mode `{mode}`")]
    InvalidCutoff { mode: String, cutoff: usize },

    #[error("operation on modes `{0}` and `{1}` would exceed the occupation cutoff")]
    CutoffOverflow(String, String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter `{name}` = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("probability table is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("unsupported number of parties: {0}")]
    UnsupportedParties(usize),

    #[error("invalid click pattern: {0}")]
    InvalidPattern(String),

    #[error("projection has zero probability")]
    ZeroProbability,

    #[error("malformed behavior: {0}")]
    MalformedBehavior(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("relaxation error: {0}")]
    Relaxation(String),

    #[error("SDP solver failed: {0}")]
    Solver(String),

    #[error("SDPA parse error at line {line}: {message}")]
    SdpaParse { line: usize, message: String },

    #[error("no sign change of the key rate in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}
