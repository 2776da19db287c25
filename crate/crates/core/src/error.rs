use thiserror::Error;

use crate::orlicz::Inadmissible;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("numerical method did not converge: {0}")]
    NonConvergent(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("moment of order {0} is infinite for an infinite-activity jump measure")]
    UnsupportedMoment(u32),

    #[error("q-exponential undefined: 1 + (1 - q) z <= 0 for q = {q}, z = {z}")]
    DomainError { q: f64, z: f64 },

    /// A constructor invariant was violated; `invariant` names it.
    #[error("invalid {invariant}: {detail}")]
    InvalidParameter {
        invariant: &'static str,
        detail: String,
    },

    #[error("degenerate distortion: xi = {0} >= 1 removes mean reversion")]
    DegenerateDistortion(f64),

    #[error("inadmissible query: {0}")]
    Inadmissible(Inadmissible),

    #[error("zero variance in the sample")]
    ZeroVariance,

    #[error("degenerate empirical statistics: {0}")]
    DegenerateEmpirical(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            invariant,
            detail: detail.into(),
        }
    }
}
