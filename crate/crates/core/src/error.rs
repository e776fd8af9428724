use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus must be positive")]
    ZeroModulus,

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("diagonal entry {index} is not a power of the primitive {order}-th root of unity")]
    NotRootOfUnity { index: usize, order: u64 },

    #[error("dimension {0} is not a prime power")]
    NotPrimePower(usize),

    #[error("invalid phase vector: {0}")]
    InvalidPhases(String),

    #[error("vector is not in the span of the generators")]
    NotInSpan,

    #[error("generators are not independent: product of orders {product} but span has {span} elements")]
    DependentGenerators { product: u128, span: u128 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group too large to enumerate ({0} elements)")]
    GroupTooLarge(u128),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
