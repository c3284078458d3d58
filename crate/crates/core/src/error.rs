use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime (supported range 3..=1000000)")]
    NotOddPrime(u64),
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gcd of two zero polynomials is undefined")]
    BothZero,
    #[error("enumeration of {what} needs {size} steps, above the guard limit {limit}")]
    TooLarge {
        what: String,
        size: f64,
        limit: u64,
    },
    #[error("subspace is not contained in the declared ambient space")]
    NotContained,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not skew-symmetric")]
    NotSkew,
    #[error("map is not an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("function is not constant on the atoms of the factor")]
    NotMeasurable,
    #[error("directions a and b are linearly dependent")]
    DependentDirections,
    #[error("set contains a nontrivial 3-term progression mod {0}")]
    NotProgressionFree(u64),
    #[error("regularity iteration did not converge within {0} stages")]
    NonConvergent(usize),
    #[error("no prime in the window ({lo}, {hi})")]
    NoPrimeInWindow { lo: u64, hi: u64 },
    #[error("value outside the required range: {0}")]
    OutOfRange(String),
    #[error("exact arithmetic overflowed 64-bit storage")]
    Overflow,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("bad magic bytes; not a grid-function file")]
    BadMagic,
    #[error("unsupported grid-function file version {0}")]
    VersionMismatch(u8),
    #[error("grid-function file length does not match its header")]
    CorruptLength,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
