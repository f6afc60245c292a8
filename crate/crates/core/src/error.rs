use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A structured index fell outside its axis.
    #[error("{axis} index {value} out of range 1..={max}")]
    Index {
        axis: &'static str,
        value: usize,
        max: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// `Z + Z_ref` vanished while converting an impedance to a reflection coefficient.
    #[error("singular load: Z = {z} makes Z + Z_ref vanish for Z_ref = {z_ref}")]
    SingularLoad { z: String, z_ref: String },

    /// A system solve whose matrix is numerically singular.
    #[error("singular system ({context}): reciprocal condition {rcond:.3e} below {threshold:.1e}")]
    SingularSystem {
        context: String,
        rcond: f64,
        threshold: f64,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: msg.into(),
        }
    }
}
