use thiserror::Error;

use crate::dsl::Program;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state is not sharp: {0}")]
    NotSharp(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("target output of example {0} is null")]
    NullTarget(usize),

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("invalid options: {0}")]
    Options(String),

    #[error("rejection budget of {attempts} attempts exceeded for program {program}")]
    RejectionBudget { program: Program, attempts: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
