use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator, the observables and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A nonzero amplitude would be shifted past the edge of the lattice.
    #[error("amplitude reached the lattice boundary at step {step} (site {site} of {num_sites})")]
    BoundaryReached {
        step: u64,
        site: usize,
        num_sites: usize,
    },

    #[error("index {index} out of range for {what} of length {len}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("empty averaging window: no samples with t >= {t_min}")]
    EmptyWindow { t_min: f64 },

    #[error("power-law fit needs at least 3 points in [{t_min}, {t_max}], found {found}")]
    TooFewPoints { t_min: f64, t_max: f64, found: usize },

    #[error("nonpositive value {value} at t = {t} inside the fit window")]
    NonPositive { t: f64, value: f64 },

    #[error("time grids differ between ensemble members")]
    MismatchedTimes,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
