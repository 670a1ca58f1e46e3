use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unbound recursion variable {0}")]
    UnboundVariable(String),
    #[error("{0} is not fresh")]
    Freshness(String),
    #[error("restriction violated: {0}")]
    Restriction(String),
    #[error("unbound reference {0}")]
    UnboundReference(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("line {line}: {msg}")]
    Load { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
