use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value or unknown key.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed topology row.
    #[error("topology parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Structurally well-formed input with invalid values.
    #[error("validation error: {0}")]
    Validation(String),

    /// An optimization step has no feasible candidate.
    #[error("infeasible in step '{step}': {msg}")]
    Infeasible { step: &'static str, msg: String },

    #[error("evaluation of {config} failed: {source}")]
    Evaluation {
        config: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
