use std::path::PathBuf;

use thiserror::Error;

/// Errors from model construction, fitting, and scoring.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the region it is evaluated on.
    #[error("point ({x}, {y}) lies outside region [{xmin}, {xmax}] x [{ymin}, {ymax}]")]
    PointOutsideRegion {
        x: f64,
        y: f64,
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },

    /// Inconsistent configuration: mismatched regions, dimensions, or invalid settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// The intensity underflowed to zero at an observed event.
    #[error("intensity underflows to zero at event {event}")]
    IntensityUnderflow { event: usize },

    /// A posterior sample gives zero intensity at an observed event.
    #[error("zero intensity at event {event} for posterior sample {sample}")]
    ZeroIntensity { event: usize, sample: usize },

    /// The partition oracle would overflow; the partition is too coarse.
    #[error("exp overflow in partition cell {cell} at sample {sample}; use a finer partition")]
    PartitionOverflow { cell: usize, sample: usize },

    /// Generic numeric failure (non-finite values, failed factorization, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Sampler initialization produced a non-finite log-likelihood.
    #[error("initialization error: {0}")]
    Init(String),

    /// File I/O failure with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
