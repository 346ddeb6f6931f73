use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario parameter violates the constraint of the module that owns it.
    #[error("invalid configuration: `{field}`: {constraint}")]
    Config { field: String, constraint: String },

    /// The best-reply system does not satisfy the diagonal-dominance condition.
    #[error("best-reply system is not well posed: nu[{group}] = {nu:e} must exceed 4(M-2)alpha^2 = {bound:e}")]
    IllPosed { group: usize, nu: f64, bound: f64 },

    #[error(
        "all leader groups are populist (sum of psi = 0); consensus is determined by initial data"
    )]
    ConsensusUndetermined,

    #[error("particle left its domain at step {step}: {what}")]
    DomainViolation { step: u64, what: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("failed to parse scenario {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category label used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config { .. } | Error::IllPosed { .. } | Error::UnknownPreset(_) => "config",
            Error::ConsensusUndetermined => "analysis",
            Error::DomainViolation { .. } => "invariant",
            Error::Quadrature(_) => "numerics",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
