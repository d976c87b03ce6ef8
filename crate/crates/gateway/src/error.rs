use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("endpoint unreachable after {attempts} attempt(s): {reason}")]
    EndpointUnreachable { attempts: u32, reason: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("response cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Prompt(#[from] reasonenv_core::PromptError),
}

/// Outcome of one attempt, before the retry policy is applied.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttemptError {
    #[error("rate limited")]
    RateLimited,
    /// Connection failures, timeouts and server errors.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl AttemptError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, AttemptError::RateLimited | AttemptError::Transient(_))
    }

    pub(crate) fn into_final(self, attempts: u32) -> GatewayError {
        match self {
            AttemptError::RateLimited => GatewayError::RateLimited { attempts },
            AttemptError::Transient(reason) => GatewayError::EndpointUnreachable { attempts, reason },
            AttemptError::Rejected { status, body } => GatewayError::Rejected { status, body },
            AttemptError::Malformed(m) => GatewayError::MalformedResponse(m),
        }
    }
}
