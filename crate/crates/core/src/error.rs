use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid key range [{lo}, {hi}): lower bound must be below upper bound")]
    InvalidRange { lo: i64, hi: i64 },

    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("tuple payload has {got} values, relation arity is {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("unknown relation '{0}'")]
    UnknownRelation(String),

    #[error("relation '{0}' is already registered")]
    DuplicateRelation(String),

    #[error("join output exceeds the limit of {limit} tuples")]
    CardinalityLimit { limit: usize },

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("empty plan expression")]
    EmptyPlan,

    #[error("at least one relation name is required")]
    NoRelations,

    /// A join operator found fewer than two operands on the stack.
    #[error("malformed program: JOIN at token {position} has fewer than two operands")]
    StackUnderflow { position: usize },

    #[error("malformed program: {count} operands left on the stack, expected 1")]
    LeftoverOperands { count: usize },

    #[error("malformed program: no tokens")]
    EmptyProgram,

    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse classes used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Catalog,
    Cap,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownRelation(_) | Error::DuplicateRelation(_) => ErrorClass::Catalog,
            Error::CardinalityLimit { .. } => ErrorClass::Cap,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Parse,
        }
    }

    /// True for the errors raised by a structurally invalid postfix program.
    pub fn is_malformed_program(&self) -> bool {
        matches!(
            self,
            Error::StackUnderflow { .. } | Error::LeftoverOperands { .. } | Error::EmptyProgram
        )
    }
}
