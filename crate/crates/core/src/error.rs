use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("finite scale: the cycle product must be at least 2")]
    FiniteScale,
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("operands do not match: {0}")]
    Mismatch(String),
    #[error("insufficient depth: need {needed}, have {have}")]
    InsufficientDepth { needed: usize, have: usize },
    #[error("element lies outside the component of the base point")]
    OutsideComponent,
    #[error("not a divisibility chain: {0}")]
    NotChain(String),
    #[error("descriptor has infinite torsion")]
    InfiniteTorsion,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value does not fit in 64 bits: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
