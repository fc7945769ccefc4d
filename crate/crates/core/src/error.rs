use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("enumeration cap exceeded: {produced} objects generated, cap is {cap}")]
    CapExceeded { produced: usize, cap: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidStructure(msg.into())
    }
}
