use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} is not positive definite (eigenvalue {index} = {eigenvalue:e})")]
    NotPositiveDefinite {
        what: String,
        index: usize,
        eigenvalue: f64,
    },

    #[error("point outside the positive-definite shape region: {0}")]
    OutsideDomain(String),

    #[error("insufficient power sums: degree {needed} requested but only {available} supplied")]
    InsufficientPowerSums { needed: usize, available: usize },

    #[error(
        "series did not converge within degree {max_degree} \
         (log partial sum {log_partial:.6}, log last term {log_last_term:.6})"
    )]
    SeriesNonConvergence {
        max_degree: usize,
        log_partial: f64,
        log_last_term: f64,
    },

    #[error("series sum is not positive (sign {sign}); the density is numerically undefined here")]
    NonPositiveSeries { sign: f64 },

    #[error("quadrature failed: {message}")]
    Quadrature { message: String, trace: Vec<String> },

    #[error("specimen {index}: {source}")]
    Specimen {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SeriesNonConvergence { .. }
            | Error::NonPositiveSeries { .. }
            | Error::Quadrature { .. } => true,
            Error::Specimen { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
