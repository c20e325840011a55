use thiserror::Error;

/// Errors raised by state algebra, circuit application and gadget evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon cap exceeded: {count} photons in one basis vector, cap is {cap}")]
    Capacity { count: u32, cap: u32 },

    #[error("mode {mode} out of range for a {modes}-mode state")]
    BadMode { mode: usize, modes: usize },

    #[error("mode {0} appears more than once")]
    DuplicateMode(usize),

    #[error("malformed permutation: {0}")]
    Permutation(String),

    #[error("dimension mismatch: {left} modes vs {right} modes")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{kind} expects {expected} target mode(s), got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("inconsistent click pattern {pattern} at site `{site}`: {reason}")]
    Consistency {
        site: String,
        pattern: String,
        reason: String,
    },

    #[error("no feed-forward rule for outcome {label} at site `{site}`")]
    UnmatchedPattern { site: String, label: String },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("golden data: {0}")]
    Golden(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
