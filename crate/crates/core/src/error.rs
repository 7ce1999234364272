use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed rule base: {0}")]
    MalformedRuleBase(String),

    #[error("evidence has probability zero")]
    ImpossibleEvidence,

    #[error("enumeration budget exceeded: {needed} outcomes > cap {cap}")]
    EnumerationBudgetExceeded { needed: u128, cap: u128 },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("incomplete family: no rule for value {value} of {variable}")]
    IncompleteFamily { variable: String, value: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid elimination ordering: {0}")]
    InvalidOrdering(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{line}:{column}: syntax error: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },

    #[error("{line}:{column}: {message}")]
    Semantic {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Source position for parse errors.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            Error::Syntax { line, column, .. } | Error::Semantic { line, column, .. } => {
                Some((*line, *column))
            }
            _ => None,
        }
    }
}
