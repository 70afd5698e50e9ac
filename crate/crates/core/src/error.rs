use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed configuration: {0}")]
    Parse(String),

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, scale {scale:e})")]
    NotPsd { min_eig: f64, scale: f64 },

    #[error("gram matrix is not positive definite; power constraint is degenerate")]
    DegenerateGram,

    #[error("dual bisection failed to bracket the multiplier after {doublings} doublings")]
    BracketFailure { doublings: u32 },

    #[error("penalty parameter must be positive, got {0}")]
    InvalidPenalty(f64),

    #[error("intermediate `{name}` is negative beyond tolerance ({value:e}) for user {user}")]
    NegativeIntermediate {
        name: &'static str,
        user: usize,
        value: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no ISL edge from satellite {from} to {to}")]
    NoSuchEdge { from: usize, to: usize },

    #[error("invalid experiment: {0}")]
    Experiment(String),
}
