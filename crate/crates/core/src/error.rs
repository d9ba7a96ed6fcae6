use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision mismatch: {0} vs {1} bits")]
    PrecisionMismatch(u32, u32),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("not divisible: {0}")]
    NotDivisible(String),
    #[error("not an endomorphism: {0}")]
    NotEndomorphism(String),
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
    #[error("axiom violated: {0}")]
    Axiom(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
