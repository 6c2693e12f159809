use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("degenerate stencil at node ({i}, {j}) located at ({x}, {y}): rank {rank} < 6")]
    DegenerateStencil {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        rank: usize,
    },

    #[error("tensor is not symmetric positive definite: [[{0}, {1}], [{2}, {3}]]")]
    NotSpd(f64, f64, f64, f64),

    #[error("grid is not convex (min corner-triangle area {min_alpha:e})")]
    NonConvex { min_alpha: f64 },

    #[error("degenerate triangle with signed area {0:e}")]
    DegenerateTriangle(f64),

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("singular matrix (pivot column {0})")]
    Singular(usize),

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("mesh generation failed: {0}")]
    Meshing(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
