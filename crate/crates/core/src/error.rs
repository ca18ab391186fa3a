use std::fmt;

use thiserror::Error;

/// Which half of a split step (or the coupled system) produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Mechanical,
    Thermal,
    Monolithic,
    Projection,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Phase::Mechanical => "mechanical",
            Phase::Thermal => "thermal",
            Phase::Monolithic => "monolithic",
            Phase::Projection => "projection",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("slab {slab} ({phase} phase): {source}")]
    Step {
        slab: usize,
        phase: Phase,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn in_phase(self, slab: usize, phase: Phase) -> Self {
        Error::Step {
            slab,
            phase,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
