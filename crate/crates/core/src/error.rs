use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("require l > n >= 2 (got n = {n}, l = {l})")]
    InvalidParams { n: u32, l: u32 },

    #[error("digit {digit} is outside the alphabet 0..{n}")]
    DigitOutOfRange { digit: u32, n: u32 },

    #[error("level {level} has more than {bound} basic intervals")]
    ResourceBound { level: u32, bound: u64 },

    #[error("{0} lies outside [0, 1]")]
    OutOfUnitInterval(String),

    #[error("comparison still ambiguous at the precision cap of {0} bits")]
    UndecidedAtMaxPrecision(u32),

    #[error("densities belong to different parameter pairs")]
    ParamsMismatch,

    #[error("union has mixed leading digits and is not inside one level-one basic interval")]
    MixedLeadingDigits,

    #[error("index set is empty, unsorted, or out of range for level {level}")]
    InvalidIndexSet { level: u32 },

    #[error("type ({i},{k}) is out of range")]
    TypeOutOfRange { i: u32, k: u32 },

    #[error("prefix of length {got} does not match the expected length {expected}")]
    MalformedPrefix { expected: u32, got: u32 },

    #[error("gap ({left}, {right}) at level {level} matches no gap type")]
    UnclassifiedGap {
        left: String,
        right: String,
        level: u32,
    },

    #[error("absorption chain decreased density at step {step}")]
    ChainNotMonotone { step: usize },

    #[error("absorption step {step}: lambda^-1 = {found} but p + (l-n)N = {expected}")]
    LambdaMismatch {
        step: usize,
        found: String,
        expected: String,
    },

    #[error("boundary density below 1: {0}")]
    BoundaryViolation(String),

    #[error("centered density below 2^-s at center {center}, radius {radius}")]
    PackingViolation { center: String, radius: String },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("set has zero length")]
    ZeroLength,

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
