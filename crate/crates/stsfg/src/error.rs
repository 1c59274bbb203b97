//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad grid, crystal, solver, or mode parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Fields on incompatible grids or of incompatible ranks.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input that makes the requested quantity undefined (all-zero counts,
    /// all-zero superposition coefficients, i == j selectivity, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Mode leakage at the window edge exceeds the accuracy bound and strict
    /// mode is on.
    #[error("accuracy: {0}")]
    Accuracy(String),

    /// Adaptive stepper ran out of steps before reaching the crystal end.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Non-finite samples appeared during propagation.
    #[error("numeric blowup at z = {z_m} m: {detail}")]
    NumericBlowup { z_m: f64, detail: String },

    /// Failure while propagating one signal of a multi-signal evaluation.
    #[error("propagation failed for signal {index}: {source}")]
    Signal {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Failure in one cell of a tomography matrix.
    #[error("propagation failed for tomography cell (row {row}, col {col}): {source}")]
    Cell {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("validation error:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Serialize(String),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numeric, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Shape(_) | Error::Degenerate(_) => 2,
            Error::Accuracy(_)
            | Error::Convergence(_)
            | Error::NumericBlowup { .. }
            | Error::Signal { .. }
            | Error::Cell { .. } => 3,
            Error::Io(_) | Error::Serialize(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
