use thiserror::Error;

/// Errors raised by the sampling library.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or parameter lies outside the domain an operation requires.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index error: {0}")]
    Index(String),
    /// Adaptive quadrature did not reach its tolerance before the refinement cap.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Index(_) => "index",
            Error::Quadrature(_) => "quadrature",
            Error::Numerical(_) => "numerical",
            Error::UnknownRegion(_) => "unknown_region",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        // written so that NaN fails the check
        let ok: bool = $cond;
        if !ok {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
