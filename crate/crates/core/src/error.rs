use thiserror::Error;

use crate::lang::ast::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at {span}: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("unknown identifier `{name}` at {span}")]
    UnknownIdent { name: String, span: Span },
    #[error("duplicate identifier `{name}` at {span}")]
    Duplicate { name: String, span: Span },
    #[error("arity mismatch at {span}: {msg}")]
    Arity { span: Span, msg: String },
    #[error("type error at {span}: {msg}")]
    Type { span: Span, msg: String },
    #[error("macro error: {0}")]
    Macro(String),
    #[error("integer overflow evaluating `{0}`")]
    Overflow(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("expectation error: {0}")]
    Expectation(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("fixed-point chain violated: {0}")]
    ChainViolation(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("{0}")]
    Invalid(String),
    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn syntax(span: Span, msg: impl Into<String>) -> Self {
        Error::Syntax {
            span,
            msg: msg.into(),
        }
    }
}
