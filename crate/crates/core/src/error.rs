use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("digit {digit} at coordinate {coord} is out of range for radix {radix}")]
    DigitOutOfRange { coord: usize, digit: u64, radix: u32 },

    #[error("expected {expected} digits, found {found}")]
    WrongLength { expected: usize, found: usize },

    #[error("malformed token {0:?}")]
    MalformedToken(String),

    #[error("rank {rank} out of range for a code of length {len}")]
    RankOutOfRange { rank: u128, len: u128 },

    #[error("invalid field order {0}: must be a prime or 2^k with k <= 16")]
    InvalidField(u64),

    #[error("q^n - 1 = {value} exceeds the factoring bound 2^48")]
    FactorBound { value: u128 },

    #[error("matrix is singular")]
    Singular,

    #[error("pointer of {capacity} values cannot address {steps} steps")]
    PointerTooSmall { capacity: u128, steps: usize },

    #[error("invalid r-function: {0}")]
    InvalidRFunction(String),

    #[error("no two spare indices outside the sources and target ({needed} needed, width {width})")]
    NoSpareIndices { needed: usize, width: usize },

    #[error("radix {0} must be odd")]
    EvenRadix(u32),

    #[error("radix {0} must be even")]
    OddRadix(u32),

    #[error("width too small: {0}")]
    TooSmall(String),

    #[error("cycle lengths {a} and {b} are not co-prime")]
    NotCoprime { a: u128, b: u128 },

    #[error("first component length {len} is shorter than the {needed} trigger words required")]
    ClockTooShort { len: u128, needed: usize },

    #[error("width {width} is not divisible by block size {block}")]
    NotDivisible { width: usize, block: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Resource errors are the ones a caller can fix by raising a limit.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceBound(_) | Error::FactorBound { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
