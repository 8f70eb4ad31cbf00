use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate cell {cell}: jacobian determinant {det:e}")]
    DegenerateCell { cell: usize, det: f64 },

    #[error("factorization failed at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("relative residual {residual:e} above tolerance {tolerance:e}")]
    Accuracy { residual: f64, tolerance: f64 },

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code: 1 for bad input, 2 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular { .. } | Error::Solver(_) | Error::Accuracy { .. } => 2,
            Error::AtLevel { source, .. } => source.exit_code(),
            Error::InvalidParameter(_)
            | Error::Configuration(_)
            | Error::DegenerateCell { .. }
            | Error::Io(_) => 1,
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}
