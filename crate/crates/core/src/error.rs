use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: all values are equal")]
    DegenerateSample,

    #[error("insufficient calibration: need at least 2 ranks and a target size of at least 2 (ranks {ranks}, target {target})")]
    InsufficientCalibration { ranks: usize, target: usize },

    #[error("invalid rank {0}: ranks must be positive and finite")]
    InvalidRank(f64),

    #[error("cannot pair {students} students with {ranks} ranks")]
    Pairing { students: usize, ranks: usize },

    #[error("degenerate fit for `{0}`: indicator needs at least two distinct values")]
    DegenerateFit(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid weight {0}: must lie in [0, 1]")]
    InvalidWeight(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("roster mismatch: {0}")]
    Roster(String),

    #[error("duplicate student id `{id}`")]
    DuplicateStudent { id: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("test scores rejected: skewness {skewness:.4} is below threshold {threshold}")]
    Rejected { skewness: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for a validity rejection, 2 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Rejected { .. } => 1,
            _ => 2,
        }
    }
}
