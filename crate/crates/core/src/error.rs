use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "aperture window [{lo:.3}, {hi:.3}] m contains no frames; poses span [{path_min:.3}, {path_max:.3}] m"
    )]
    EmptyWindow {
        lo: f64,
        hi: f64,
        path_min: f64,
        path_max: f64,
    },

    /// Parameter combination outside the feasible region of a scan.
    #[error("{message}")]
    Infeasible { message: String, constraint: String },

    #[error("disparity {disparity} m is at or beyond the inter-ocular distance {eye_distance} m")]
    BeyondInfinity { disparity: f64, eye_distance: f64 },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's parameters rather than the environment.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::EmptyWindow { .. }
                | Error::Infeasible { .. }
                | Error::BeyondInfinity { .. }
                | Error::DimensionMismatch(..)
                | Error::Unsupported(_)
        )
    }
}
