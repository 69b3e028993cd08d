use thiserror::Error;

/// State of a power series at the point where summation was abandoned.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDiagnostics {
    pub terms: usize,
    pub last_term: f64,
    pub partial_sum: f64,
    pub precision_bits: usize,
}

impl std::fmt::Display for SeriesDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} terms, last term {:e}, partial sum {:e}, {} bits",
            self.terms, self.last_term, self.partial_sum, self.precision_bits
        )
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: need at least {required} points per axis, got {actual}")]
    GridTooSmall { required: usize, actual: usize },

    #[error("outside the domain of validity: {0}")]
    Domain(String),

    #[error("series did not converge: {message} ({diagnostics})")]
    Convergence {
        message: String,
        diagnostics: SeriesDiagnostics,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Numeric(_) | Error::IllConditioned(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
