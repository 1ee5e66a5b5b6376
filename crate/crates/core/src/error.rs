use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("basis is incomplete: codeword {missing} is not a subset sum of the weights")]
    Incomplete { missing: u32 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("basis has {length} weights but representation enumeration is limited to {limit}")]
    Capacity { length: usize, limit: usize },

    #[error("mapping row for codeword {codeword} decodes to {decoded}")]
    Decode { codeword: u32, decoded: u64 },

    #[error("{kind} mapping requested for a basis that is not the {kind} basis")]
    KindMismatch { kind: &'static str },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{}", match .line { Some(l) => format!("parse error at line {l}: {msg}"), None => format!("parse error: {msg}") })]
    Parse { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
