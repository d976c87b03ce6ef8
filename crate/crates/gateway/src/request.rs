use reasonenv_core::{Message, MessageSequence, Task};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXTRACTION_TEMPERATURE: f64 = 0.0;
pub const GENERATION_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_name: String,
    pub messages: MessageSequence,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Distinguishes repeated samples of the same prompt in the cache.
    /// Never sent to the endpoint.
    #[serde(default)]
    pub sample: u32,
}

impl CompletionRequest {
    /// Request with the task's default decoding parameters.
    pub fn for_task(task: Task, model_name: &str, messages: MessageSequence) -> Self {
        CompletionRequest {
            model_name: model_name.to_string(),
            messages,
            temperature: if task.is_extraction() {
                EXTRACTION_TEMPERATURE
            } else {
                GENERATION_TEMPERATURE
            },
            max_tokens: DEFAULT_MAX_TOKENS,
            sample: 0,
        }
    }

    pub fn with_sample(mut self, sample: u32) -> Self {
        self.sample = sample;
        self
    }

    /// Hex SHA-256 over a canonical encoding of everything that affects the
    /// answer.
    pub fn cache_key(&self) -> String {
        #[derive(Serialize)]
        struct Keyed<'a> {
            model: &'a str,
            messages: &'a [Message],
            temperature: f64,
            max_tokens: u32,
            #[serde(skip_serializing_if = "is_zero")]
            sample: u32,
        }
        fn is_zero(v: &u32) -> bool {
            *v == 0
        }
        let encoded = serde_json::to_vec(&Keyed {
            model: &self.model_name,
            messages: &self.messages,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            sample: self.sample,
        })
        .expect("request encodes as JSON");
        Sha256::digest(&encoded).iter().map(|b| format!("{b:02x}")).collect()
    }
}
