use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("inclusion-exclusion over {d} coordinates exceeds the limit of {max}")]
    TooManyCoordinates { d: usize, max: usize },

    #[error("invalid coordinate subset: {0}")]
    InvalidSubset(String),

    #[error("cannot parse descriptor {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("generator has no essential-sup bound; supply a truncation cap")]
    UnboundedGenerator,

    #[error("extremal concurrence probability is zero for {0}; conditioning on a complete record is undefined")]
    ZeroConcurrence(String),

    #[error("thinning sampler exceeded {0} Poisson points")]
    ThinningCap(u64),

    #[error("empty input stream")]
    EmptyStream,

    #[error("observation {index} has dimension {got}, expected {expected}")]
    DimensionDrift {
        index: u64,
        expected: usize,
        got: usize,
    },

    #[error("observation {index} contains a NaN coordinate")]
    NotANumber { index: u64 },

    #[error("observations {first} and {second} both dominate all others")]
    ChampionTie { first: u64, second: u64 },

    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
