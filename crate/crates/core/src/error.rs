use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid discriminant {0}: must be negative and congruent to 0 or 1 mod 4")]
    InvalidDiscriminant(i64),

    #[error("p must be nonzero")]
    ZeroElement,

    #[error("line index {k} is below kappa_p = {kappa}")]
    LineOutsideHalfPlane { k: i64, kappa: i64 },

    #[error("guard violated: {0}")]
    Guard(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("renormalization psi(N) is unresolved for the {0} regime; pass an explicit --psi")]
    UnresolvedPsi(String),

    #[error("no limit measure for the experimental regime")]
    ExperimentalRegime,

    #[error("unknown test function descriptor `{0}`")]
    UnknownTestFunction(String),

    #[error("domain error in {func}: {value}")]
    Domain { func: &'static str, value: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
