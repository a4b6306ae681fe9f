use thiserror::Error;

use crate::fuzzy::FuzzyInterval;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two fuzzy evaluations of the same point do not overlap.
    #[error("empty intersection of fuzzy evaluations {0} and {1}")]
    EmptyIntersection(FuzzyInterval, FuzzyInterval),

    /// The environment broke the protocol at `round`: a response excluded the
    /// true value, was too wide, or contradicted an earlier response.
    #[error("environment inconsistency at round {round}: {reason}")]
    Inconsistent { round: u64, reason: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("point {x} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Round index of an environment inconsistency, if this is one.
    pub fn failing_round(&self) -> Option<u64> {
        match self {
            Error::Inconsistent { round, .. } => Some(*round),
            _ => None,
        }
    }
}
