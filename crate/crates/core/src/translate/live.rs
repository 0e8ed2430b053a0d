//! HTTP client for a DeepL-v2-compatible `/v2/translate` endpoint.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{TranslateError, TranslationRequest, Translator};

pub const DEFAULT_ENDPOINT: &str = "https://api-free.deepl.com/v2/translate";
pub const DEFAULT_AUTH_KEY_ENV: &str = "DEEPL_AUTH_KEY";

/// Spaces requests at least `interval` apart across all threads sharing it.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(requests_per_second: f64) -> Self {
        let interval = if requests_per_second > 0.0 {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        RateLimiter { interval, next_slot: Mutex::new(None) }
    }

    pub fn unlimited() -> Self {
        RateLimiter { interval: Duration::ZERO, next_slot: Mutex::new(None) }
    }

    /// Blocks until this caller's slot; returns the slot instant.
    pub fn acquire(&self) -> Instant {
        let slot = {
            let mut next = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
        slot
    }
}

/// Backoff delays between attempts; the number of retries is `delays.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub delays: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { delays: vec![Duration::from_secs(1), Duration::from_secs(2), Duration::from_secs(4)] }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { delays: Vec::new() }
    }

    /// Runs `op`, retrying transient failures after each configured delay.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T, TranslateError>) -> Result<T, TranslateError> {
        let mut delays = self.delays.iter();
        loop {
            match op() {
                Err(e) if e.is_transient() => match delays.next() {
                    Some(d) => {
                        log::debug!("transient failure ({e}); retrying in {d:?}");
                        thread::sleep(*d);
                    }
                    None => return Err(e),
                },
                other => return other,
            }
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    text: [&'a str; 1],
    source_lang: &'a str,
    target_lang: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    translations: Vec<WireTranslation>,
}

#[derive(Deserialize)]
struct WireTranslation {
    text: String,
}

/// Live translation client. One sentence per request.
pub struct DeeplClient {
    endpoint: String,
    auth_key: String,
    agent: ureq::Agent,
    limiter: RateLimiter,
    retry: RetryPolicy,
}

impl DeeplClient {
    pub fn new(endpoint: &str, auth_key: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        DeeplClient {
            endpoint: endpoint.to_string(),
            auth_key: auth_key.to_string(),
            agent: config.into(),
            limiter: RateLimiter::per_second(5.0),
            retry: RetryPolicy::default(),
        }
    }

    /// Reads the key from the environment variable `key_env`.
    pub fn from_env(endpoint: &str, key_env: &str) -> Result<Self, TranslateError> {
        let key = std::env::var(key_env)
            .map_err(|_| TranslateError::InvalidRequest(format!("environment variable {key_env} is not set")))?;
        Ok(DeeplClient::new(endpoint, &key))
    }

    pub fn with_rate_limiter(mut self, limiter: RateLimiter) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        self.limiter.acquire();
        let body = WireRequest {
            text: [&request.text],
            // the service only accepts variant-free source tags
            source_lang: request.source.base(),
            target_lang: request.target.as_str(),
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("DeepL-Auth-Key {}", self.auth_key))
            .send_json(&body)
            .map_err(|e| TranslateError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(TranslateError::Auth(status)),
            456 => return Err(TranslateError::QuotaExhausted(status)),
            _ => {
                let body = response.body_mut().read_to_string().unwrap_or_default();
                return Err(TranslateError::Status { status, body });
            }
        }
        let parsed: WireResponse =
            response.body_mut().read_json().map_err(|e| TranslateError::BadResponse(e.to_string()))?;
        let text = parsed
            .translations
            .into_iter()
            .next()
            .map(|t| t.text)
            .ok_or_else(|| TranslateError::BadResponse("no translations in response".into()))?;
        if text.trim().is_empty() {
            return Err(TranslateError::BadResponse("empty translation".into()));
        }
        Ok(text)
    }
}

impl Translator for DeeplClient {
    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        self.retry.run(|| self.attempt(request))
    }

    fn identity(&self) -> String {
        format!("deepl-v2 {}", self.endpoint)
    }
}
