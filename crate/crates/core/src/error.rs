use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input data (non-finite coordinates, dimension mismatches, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A gain query was issued against an empty distribution buffer.
    #[error("no distribution available")]
    NoDistribution,

    /// Camera position coincides with the point of interest.
    #[error("undefined ideal orientation: camera position coincides with the point of interest")]
    UndefinedOrientation,

    /// The reference map holds no occupied voxels inside the evaluation region.
    #[error("empty reference map in the evaluation region")]
    EmptyReference,

    /// The planner was started from a state that violates its own constraints.
    #[error("infeasible start state: {0}")]
    InfeasibleStart(String),

    /// Configuration file problem (missing file, bad value, failed validation).
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
