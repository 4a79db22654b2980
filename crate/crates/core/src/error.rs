use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown controller variant `{0}` (expected bas, mz or mz-dr)")]
    UnknownVariant(String),

    #[error("unknown scenario `{0}` (expected turn135 or uturn)")]
    UnknownScenario(String),

    #[error("longitudinal speed {vx} m/s is below the kinematic floor {floor} m/s")]
    SingularKinematics { vx: f64, floor: f64 },

    #[error("path-frame singularity: 1 - rho*e_y = {0}")]
    PathSingularity(f64),

    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("position is {distance:.2} m from the reference path (corridor {corridor} m)")]
    OffPath { distance: f64, corridor: f64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
