use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to be
/// printed as a single diagnostic line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} lies outside the domain [{lo}, {hi}]")]
    Domain { point: String, lo: String, hi: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("set is not invariant: {map}({point}) = {image} escapes the set")]
    NotInvariant {
        map: &'static str,
        point: String,
        image: String,
    },

    #[error("unknown chain state {0}")]
    UnknownState(String),

    #[error("index {index} out of range (available: {available})")]
    OutOfRange { index: usize, available: usize },

    #[error("witness search exhausted its caps before completing a stage: {0}")]
    WitnessExhausted(String),

    #[error("perturbation construction failed on cell {cell}: {reason}")]
    Construction { cell: usize, reason: String },

    #[error("singular linear system")]
    Singular,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
