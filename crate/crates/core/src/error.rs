use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: parameter, capacity and I/O
/// problems are the caller's to fix (exit 2), integrity failures point at a
/// bug or an inconsistent input (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Raised by `build_gamma_config` when `m * gamma` is not a multiple of `n`.
    #[error(
        "m*gamma = {m}*{gamma} is not divisible by n = {n}; nearest valid m: {}",
        fmt_suggestions(*.below, *.above)
    )]
    Divisibility {
        n: usize,
        m: usize,
        gamma: usize,
        below: Option<usize>,
        above: usize,
    },

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    Capacity(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors the caller caused through bad input.
    pub fn is_parameter_error(&self) -> bool {
        !matches!(self, Error::Integrity(_))
    }
}

fn fmt_suggestions(below: Option<usize>, above: usize) -> String {
    match below {
        Some(b) => format!("{b} or {above}"),
        None => format!("{above}"),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
