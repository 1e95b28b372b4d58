use alloc::boxed::Box;
use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RnsError {
    #[error("moduli list is empty")]
    EmptyModuli,
    #[error("modulus {index} is {value}, must be at least 2")]
    ModulusTooSmall { index: usize, value: u64 },
    #[error("moduli {0} and {1} share a common factor")]
    NotCoprime(usize, usize),
    #[error("modulus {0} does not fit the digit width")]
    DigitTooWide(usize),
    #[error("digit width of {0} bits is not supported (1..=31)")]
    BadDigitWidth(u32),
    #[error("fractional digit count {frac_count} must be in 1..{digits}")]
    BadPartition { frac_count: usize, digits: usize },
    #[error("{value} has no inverse modulo {modulus}")]
    NoInverse { value: u64, modulus: u64 },
    #[error("digit {index} is out of range")]
    DigitOutOfRange { index: usize },
    #[error("expected {expected} digits, found {found}")]
    DigitCount { expected: usize, found: usize },
    #[error("modulus {0} of the source set is missing from the target set")]
    ModulusMismatch(u32),
    #[error("operands belong to different moduli sets")]
    SetMismatch,
    #[error("operands have different scale exponents")]
    ScaleMismatch,
    #[error("value is outside the representable range")]
    OutOfRange,
    #[error("cannot parse {0:?} as a number")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("array size must be at least 1")]
    EmptyArray,
    #[error("weights have not been loaded")]
    WeightsNotLoaded,
    #[error("accumulator capacity exceeded: {0}")]
    CapacityViolation(Box<crate::fixed::CapacityViolation>),
}

impl From<crate::fixed::CapacityViolation> for RnsError {
    fn from(v: crate::fixed::CapacityViolation) -> Self {
        RnsError::CapacityViolation(Box::new(v))
    }
}

pub type Result<T, E = RnsError> = core::result::Result<T, E>;
