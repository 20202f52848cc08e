use std::fmt;

/// Source position inside a formula or spec file (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("macro `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("indicator witness `{0}` collides with another variable")]
    WitnessCollision(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("interval [{b},{e}] out of range for trace of length {len}")]
    IntervalOutOfRange { b: usize, e: usize, len: usize },
    #[error("formula is not prefix-closed; latency analysis supports prefix-closed formulas only")]
    NotPrefixClosed,
    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },
    #[error("controller integrity: {0}")]
    Integrity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }
}
