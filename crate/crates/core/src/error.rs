use std::path::PathBuf;

/// Errors raised by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or inconsistent parameters (grid sizes, domains, table keys, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A run produced non-finite values.
    #[error("numerical blow-up at step {step} (t = {time}): {detail}")]
    Blowup { step: usize, time: f64, detail: String },

    /// Certified quadrature did not reach the requested tolerance.
    #[error("quadrature did not reach tolerance {requested:e} within {levels} levels (best achieved {achieved:e})")]
    Quadrature {
        requested: f64,
        achieved: f64,
        levels: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
