use crate::gaussian::GaussianInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{a} has no inverse modulo {m}")]
    NoInverse { a: GaussianInt, m: GaussianInt },
    #[error("cofactors {0} and {1} are not coprime")]
    NotCoprime(GaussianInt, GaussianInt),
    #[error("cofactor {0} has modulus below sqrt(2)")]
    ModulusTooSmall(GaussianInt),
    #[error("product of cofactors {0} is not a positive real integer")]
    NonRealProduct(GaussianInt),
    #[error("common divisor M must be at least 1, got {0}")]
    InvalidGcd(i64),
    #[error("remainder {index} disagrees with the common remainder by {deviation}")]
    InconsistentRemainders { index: usize, deviation: f64 },
    #[error("sigma[{index}] = {value} is not a positive finite number")]
    InvalidSigma { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("subset sweep over {channels} channels exceeds the limit of {limit}")]
    TooManyChannels { channels: usize, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("value {0} lies outside the fundamental region")]
    OutsideRegion(String),
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}
