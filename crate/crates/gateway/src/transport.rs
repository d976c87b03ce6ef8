//! Ways of getting an answer for one request: a chat-completion endpoint
//! over HTTP, or a deterministic mock model.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use reasonenv_core::prompt::last_user_turn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{AttemptError, GatewayError};
use crate::request::CompletionRequest;

/// Environment variable holding the bearer token.
pub const API_KEY_VAR: &str = "MODEL_API_KEY";

/// One attempt at answering a request. Retries, caching and concurrency
/// limits are applied by [`crate::ModelClient`].
pub trait Transport: Send + Sync {
    fn attempt(&self, req: &CompletionRequest) -> Result<String, AttemptError>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn attempt(&self, req: &CompletionRequest) -> Result<String, AttemptError> {
        (**self).attempt(req)
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(url: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpTransport {
            client,
            url: url.to_string(),
            api_key,
        })
    }

    /// Reads the token from `MODEL_API_KEY` when set.
    pub fn from_env(url: &str, timeout: Duration) -> Result<Self, GatewayError> {
        Self::new(url, std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()), timeout)
    }
}

/// Extracts the assistant text from an OpenAI-style completion body.
pub fn parse_completion(body: &str) -> Result<String, AttemptError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AttemptError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| AttemptError::Malformed("missing choices[0].message.content".into()))
}

impl Transport for HttpTransport {
    fn attempt(&self, req: &CompletionRequest) -> Result<String, AttemptError> {
        let body = json!({
            "model": req.model_name,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut call = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| AttemptError::Transient(e.to_string()))?;
        if status.as_u16() == 429 {
            return Err(AttemptError::RateLimited);
        }
        if status.is_server_error() {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Rejected {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
            });
        }
        parse_completion(&text)
    }
}

/// A line of a mock answer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// The last user turn of the prompt.
    pub prompt: String,
    pub response: String,
}

/// Deterministic stand-in for a model. Every rule looks only at the last
/// user turn.
#[derive(Debug, Clone, PartialEq)]
pub enum MockModel {
    /// Returns the last user turn with one pair of enclosing quotes removed.
    Identity,
    /// Returns the last user turn with its characters reversed.
    Reverse,
    Empty,
    Constant(String),
    /// Looks the last user turn up in a table; unknown prompts get `fallback`.
    Table {
        answers: HashMap<String, String>,
        fallback: String,
    },
}

impl MockModel {
    /// Parses the part of a `mock:` endpoint after the scheme:
    /// `identity`, `reverse`, `empty`, `constant:<text>`, `table:<path>`.
    pub fn parse(rule: &str) -> Result<Self, GatewayError> {
        let (name, arg) = rule.split_once(':').unwrap_or((rule, ""));
        match name {
            "identity" => Ok(MockModel::Identity),
            "reverse" => Ok(MockModel::Reverse),
            "empty" => Ok(MockModel::Empty),
            "constant" => Ok(MockModel::Constant(arg.to_string())),
            "table" if !arg.is_empty() => Self::load_table(Path::new(arg)),
            _ => Err(GatewayError::Config(format!("unknown mock rule `{rule}`"))),
        }
    }

    pub fn table(rows: impl IntoIterator<Item = TableRow>) -> Self {
        let mut answers = HashMap::new();
        for row in rows {
            answers.entry(row.prompt).or_insert(row.response);
        }
        MockModel::Table {
            answers,
            fallback: String::new(),
        }
    }

    /// Reads a JSONL file of `{prompt, response}` rows.
    pub fn load_table(path: &Path) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<TableRow>(l)
                    .map_err(|e| GatewayError::Config(format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::table(rows))
    }

    pub fn answer(&self, req: &CompletionRequest) -> String {
        let turn = last_user_turn(&req.messages).unwrap_or("");
        match self {
            MockModel::Identity => {
                let t = turn.trim();
                t.strip_prefix('"')
                    .and_then(|s| s.strip_suffix('"'))
                    .unwrap_or(t)
                    .to_string()
            }
            MockModel::Reverse => turn.chars().rev().collect(),
            MockModel::Empty => String::new(),
            MockModel::Constant(text) => text.clone(),
            MockModel::Table { answers, fallback } => answers.get(turn).unwrap_or(fallback).clone(),
        }
    }
}

impl Transport for MockModel {
    fn attempt(&self, req: &CompletionRequest) -> Result<String, AttemptError> {
        Ok(self.answer(req))
    }
}

/// Where completions come from, as written in configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    Http(String),
    Mock(MockModel),
}

impl Endpoint {
    pub fn parse(text: &str) -> Result<Self, GatewayError> {
        if let Some(rule) = text.strip_prefix("mock:") {
            Ok(Endpoint::Mock(MockModel::parse(rule)?))
        } else if text.starts_with("http://") || text.starts_with("https://") {
            Ok(Endpoint::Http(text.to_string()))
        } else {
            Err(GatewayError::Config(format!(
                "endpoint `{text}` is neither an http(s) URL nor a mock: rule"
            )))
        }
    }

    pub fn transport(self, timeout: Duration) -> Result<Box<dyn Transport>, GatewayError> {
        Ok(match self {
            Endpoint::Http(url) => Box::new(HttpTransport::from_env(&url, timeout)?),
            Endpoint::Mock(m) => Box::new(m),
        })
    }
}
