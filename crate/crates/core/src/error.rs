use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A raster whose buffer does not match its declared shape or sample range.
    #[error("malformed raster: {0}")]
    Structural(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("no supported image files in {}", .0.display())]
    EmptyCorpus(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Structural(_)
                | Error::Parameter(_)
                | Error::DimensionMismatch { .. }
                | Error::EmptyCorpus(_)
                | Error::Config { .. }
        )
    }
}
