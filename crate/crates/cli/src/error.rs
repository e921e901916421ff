use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] fracfite::Error),

    #[error("solver did not converge; partial trace written to {0}")]
    Partial(PathBuf),

    #[error("{0} counterexample(s) recorded")]
    Counterexamples(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fracfite::Error as E;
        match self {
            CliError::Core(E::SolverNonConvergence { .. } | E::SingularStep { .. })
            | CliError::Partial(_) => 3,
            CliError::Core(E::AuditFailure { .. }) | CliError::Counterexamples(_) => 4,
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
