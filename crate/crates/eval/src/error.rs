use std::path::PathBuf;

use reasonenv_core::{HwsError, PromptError, SelectionError, StatsError};
use reasonenv_gateway::GatewayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("sample `{0}` has no parse tree")]
    MissingTree(String),
    #[error("sample `{0}` has no extracted tuples")]
    MissingExtraction(String),
    #[error("sample `{id}` has no gold answer usable for {task}")]
    WrongGold { id: String, task: &'static str },
    #[error("parser: {0}")]
    Parser(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Hws(#[from] HwsError),
}

impl EvalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the model endpoint itself, as opposed to one
    /// unusable answer.
    pub fn is_endpoint_failure(&self) -> bool {
        matches!(
            self,
            EvalError::Gateway(
                GatewayError::EndpointUnreachable { .. }
                    | GatewayError::RateLimited { .. }
                    | GatewayError::Rejected { .. }
                    | GatewayError::Config(_)
                    | GatewayError::Cache(_)
            )
        )
    }
}
