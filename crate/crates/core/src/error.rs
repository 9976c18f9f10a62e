use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("family not applicable: {0}")]
    NotApplicable(String),
    #[error("unresolved at truncation {0}")]
    Unresolved(usize),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
