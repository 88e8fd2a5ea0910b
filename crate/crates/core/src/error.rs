use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// Conjugate gradient met a direction with non-positive curvature.
    #[error("cg breakdown at iteration {iteration}: p^T A p = {curvature:e} (operator is not SPD)")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("symmetry repair at level {level} exceeded threshold: relative asymmetry {magnitude:e}")]
    SymmetryLoss { level: usize, magnitude: f64 },

    /// Failure inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps `self` with the identity of the stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line front end: 2 for usage and
    /// configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Stage { source, .. } => match source.exit_code() {
                2 => 2,
                _ => 3,
            },
            Error::NumericalDomain(_)
            | Error::Breakdown { .. }
            | Error::NotPositiveDefinite(_)
            | Error::SymmetryLoss { .. } => 3,
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}
