use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::error::GatewayError;
use crate::request::CompletionRequest;
use crate::transport::{Endpoint, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2,
        }
    }
}

impl RetryPolicy {
    /// Pause before attempt `attempt + 1`, for `attempt` in `1..max_attempts`.
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

/// Waits between attempts. Swappable so tests need not sleep.
pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    /// `http(s)://...` chat-completion URL or `mock:<rule>`.
    pub endpoint: String,
    pub model: String,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            endpoint: "mock:identity".into(),
            model: "gpt-3.5-turbo".into(),
            max_in_flight: 4,
            timeout_secs: 120,
        }
    }
}

/// Counting semaphore for the in-flight limit.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("limiter lock");
            while *free == 0 {
                free = self.cv.wait(free).expect("limiter lock");
            }
            *free -= 1;
        }
        struct Release<'a>(&'a Limiter);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                *self.0.free.lock().expect("limiter lock") += 1;
                self.0.cv.notify_one();
            }
        }
        let _release = Release(self);
        f()
    }
}

type Outcome = Result<String, GatewayError>;

#[derive(Default)]
struct Flight {
    done: Mutex<Option<Outcome>>,
    cv: Condvar,
}

/// Cache-first, retrying, concurrency-limited completion client.
/// Concurrent identical requests share one call.
pub struct ModelClient {
    transport: Box<dyn Transport>,
    cache: ResponseCache,
    retry: RetryPolicy,
    sleeper: Box<dyn Sleeper>,
    limiter: Limiter,
    in_flight: Mutex<HashMap<String, Arc<Flight>>>,
    calls: AtomicU64,
    model: String,
}

impl ModelClient {
    pub fn new(transport: Box<dyn Transport>, cache: ResponseCache, model: &str, max_in_flight: usize) -> Self {
        ModelClient {
            transport,
            cache,
            retry: RetryPolicy::default(),
            sleeper: Box::new(ThreadSleeper),
            limiter: Limiter::new(max_in_flight),
            in_flight: Mutex::new(HashMap::new()),
            calls: AtomicU64::new(0),
            model: model.to_string(),
        }
    }

    pub fn from_config(cfg: &GatewayConfig, cache: ResponseCache) -> Result<Self, GatewayError> {
        let transport = Endpoint::parse(&cfg.endpoint)?.transport(Duration::from_secs(cfg.timeout_secs))?;
        Ok(Self::new(transport, cache, &cfg.model, cfg.max_in_flight))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Box<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Attempts made against the transport so far (cache hits excluded).
    pub fn transport_calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        let key = req.cache_key();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }

        let (flight, leader) = {
            let mut map = self.in_flight.lock().expect("in-flight lock");
            match map.get(&key) {
                Some(f) => (Arc::clone(f), false),
                None => {
                    let f = Arc::new(Flight::default());
                    map.insert(key.clone(), Arc::clone(&f));
                    (f, true)
                }
            }
        };

        if !leader {
            let mut done = flight.done.lock().expect("flight lock");
            while done.is_none() {
                done = flight.cv.wait(done).expect("flight lock");
            }
            return done.clone().expect("set by leader");
        }

        // A previous leader may have filled the cache after our first look.
        let outcome = match self.cache.get(&key) {
            Some(hit) => Ok(hit),
            None => self
                .limiter
                .run(|| self.with_retries(req))
                .and_then(|text| self.cache.insert(&key, text)),
        };
        *flight.done.lock().expect("flight lock") = Some(outcome.clone());
        flight.cv.notify_all();
        self.in_flight.lock().expect("in-flight lock").remove(&key);
        outcome
    }

    fn with_retries(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        let max = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            self.calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.attempt(req) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempt < max => {
                    self.sleeper.sleep(self.retry.delay_after(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e.into_final(attempt)),
            }
        }
    }
}
