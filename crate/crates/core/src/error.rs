//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by model construction, solvers and checks.
///
/// The variants are grouped the way the command-line front end maps them to
/// exit codes: [`Error::Domain`], [`Error::Index`], [`Error::Window`],
/// [`Error::Labeling`] and [`Error::Dependency`] are input problems, while
/// [`Error::Accuracy`] and [`Error::Truncation`] mean a numerical procedure
/// could not reach its tolerance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("window error: {0}")]
    Window(String),

    #[error("labeling ambiguity: {count} eigenvalues in [{lo}, {hi}): {contents:?}")]
    Labeling {
        lo: f64,
        hi: f64,
        count: usize,
        contents: Vec<f64>,
    },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error(
        "truncation did not stabilize: last size {size}, last shift {last_shift:e} (target {target:e})"
    )]
    Truncation {
        size: usize,
        last_shift: f64,
        target: f64,
    },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by a numerical procedure that failed to reach
    /// its tolerance (as opposed to invalid input).
    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy(_) | Error::Truncation { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
