use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("unsupported argument: {0}")]
    Unsupported(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("contour collision: {0}")]
    ContourCollision(String),

    #[error("iteration cap of {cap} exceeded")]
    IterationCap { cap: u64 },

    #[error("no asymptotic regime applies: {0}")]
    RegimeAmbiguous(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver instability: {0}")]
    Instability(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_)
                | Error::NonConvergence(_)
                | Error::ContourCollision(_)
                | Error::IterationCap { .. }
                | Error::Instability(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
