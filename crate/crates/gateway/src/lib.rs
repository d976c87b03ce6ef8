//! Access to a chat-completion model: an HTTP endpoint or a deterministic
//! mock, behind a response cache with retries and an in-flight limit.

pub mod cache;
pub mod client;
pub mod error;
pub mod generate;
pub mod request;
pub mod transport;

pub use cache::{CacheEntry, ResponseCache};
pub use client::{GatewayConfig, ModelClient, RetryPolicy, Sleeper, ThreadSleeper};
pub use error::{AttemptError, GatewayError};
pub use generate::{expand_clique, make_sentences, paraphrase_clique};
pub use request::CompletionRequest;
pub use transport::{Endpoint, HttpTransport, MockModel, TableRow, Transport};
