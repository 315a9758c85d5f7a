use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feasibility violation: {what}[{index}] = {value:e} is below -tol")]
    FeasibilityViolation {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("simplex pivot limit of {limit} exceeded")]
    PivotLimitExceeded { limit: usize },

    #[error("branch-and-bound node limit of {limit} exceeded")]
    NodeLimitExceeded { limit: usize },

    #[error("labeling failed: {0}")]
    LabelingFailure(String),

    #[error("config cannot be satisfied: {0}")]
    ConfigInfeasible(String),

    #[error("parse error in {}: line {line}, column {column}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("format error at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("cannot remove the last remaining constraint")]
    LastConstraint,

    #[error("negative {what} feature at index {index}: {value:e}")]
    NegativeFeature {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("assembly failed: {0}")]
    AssemblyFailure(String),

    #[error("degenerate range: all distances are equal")]
    DegenerateRange,

    #[error("constant input to correlation")]
    ConstantInput,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::FeasibilityViolation { .. }
            | Error::ConfigInfeasible(_)
            | Error::Parse { .. }
            | Error::Format { .. }
            | Error::NegativeFeature { .. }
            | Error::ShapeMismatch(_)
            | Error::EmptyCorpus
            | Error::LastConstraint => 2,
            Error::PivotLimitExceeded { .. } | Error::NodeLimitExceeded { .. } => 3,
            Error::AssemblyFailure(_) => 4,
            _ => 1,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) fn ensure_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what}[{i}]")));
    }
    Ok(())
}
