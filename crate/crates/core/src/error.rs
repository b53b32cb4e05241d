use std::path::PathBuf;

use thiserror::Error;

/// One failed validation check, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_fields(.0))]
    Invalid(Vec<FieldError>),

    #[error("time {t} outside the drive window [0, {window}]")]
    OutsideDriveWindow { t: f64, window: f64 },

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("integrator did not converge: max step-halving deviation {deviation:.3e} after {substeps} sub-steps")]
    NonConvergence { deviation: f64, substeps: usize },

    #[error("density matrix lost positivity (min eigenvalue {min_eigenvalue:.3e} at t = {t})")]
    Positivity { min_eigenvalue: f64, t: f64 },

    #[error("herald event has zero probability")]
    ZeroNorm,

    #[error("integration region carries no detection probability")]
    EmptyRegion,

    #[error("emission records do not share a time grid")]
    GridMismatch,

    #[error("time {0} is outside the record grid")]
    OutsideGrid(f64),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("empty landscape")]
    EmptyLandscape,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Positivity { .. } | Error::Calibration(_)
        )
    }
}

fn join_fields(errs: &[FieldError]) -> String {
    errs.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
