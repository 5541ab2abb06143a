use thiserror::Error;

/// Errors produced by matrix operations, scheme construction and the text
/// format parsers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a prime in [2, 2^16]")]
    InvalidModulus(u64),
    #[error("entry {value} is not a residue modulo {modulus}")]
    EntryOutOfRange { value: u32, modulus: u32 },
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("infeasible: a target row lies outside the row space")]
    Infeasible,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("demand {demand} out of range for a library of {files} files")]
    DemandOutOfRange { demand: usize, files: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dims(message: impl Into<String>) -> Self {
        Error::DimensionMismatch(message.into())
    }
}
