use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("{module}: invalid parameter: {detail}")]
    InvalidParameter { module: &'static str, detail: String },

    /// The request lies outside the envelope a routine supports.
    #[error("{module}: outside supported range: {detail}")]
    OutOfRange { module: &'static str, detail: String },

    /// An iterative method failed to converge or a certification check failed.
    #[error("{module}: numerical failure: {detail}")]
    Numerical { module: &'static str, detail: String },

    /// Hypotheses of a constructive statement fail on the supplied data.
    #[error("{module}: hypotheses not satisfied: {detail}")]
    Refused { module: &'static str, detail: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter { module, detail: detail.into() }
    }

    pub(crate) fn range(module: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange { module, detail: detail.into() }
    }

    pub(crate) fn numerical(module: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical { module, detail: detail.into() }
    }

    pub(crate) fn refused(module: &'static str, detail: impl Into<String>) -> Self {
        Error::Refused { module, detail: detail.into() }
    }

    /// True for errors caused by bad input rather than by a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::OutOfRange { .. } | Error::Parse(_)
        )
    }
}
