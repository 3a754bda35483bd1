use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("space mismatch: {0}")]
    Space(String),
    #[error("degree violation: {0}")]
    Degree(String),
    #[error("not transversal: {0}")]
    NotTransversal(String),
    #[error("family not closed under subsequences: missing {0}")]
    NotClosed(String),
    #[error("relation failure: {0}")]
    Relation(String),
    #[error("obstruction: {0}")]
    Obstruction(String),
    #[error("Maurer-Cartan: {0}")]
    MaurerCartan(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
