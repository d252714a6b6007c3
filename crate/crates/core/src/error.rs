use thiserror::Error;

/// Errors shared by the audit, simulation, and planning layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Skew is undefined: the aggregate contains no male- or female-labeled
    /// units, so the share has a zero denominator.
    #[error("skew is undefined: no male- or female-labeled units in the aggregate")]
    UndefinedSkew,

    /// Rates are undefined for a group with zero impressions.
    #[error("rates are undefined for {0}: zero impressions")]
    UndefinedRate(String),

    /// A computation needs observed data that the ledger does not contain.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The configured platform lacks a capability the requested plan needs.
    #[error("platform capability missing: {0}")]
    UnsupportedPlatform(String),
}

pub type Result<T> = std::result::Result<T, Error>;
