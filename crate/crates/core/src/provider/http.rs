use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use super::ProviderError;

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub url: String,
    /// Sent as a bearer token when present.
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Retries after the first attempt, on timeouts and 5xx only.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent one.
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key: None,
            timeout: Duration::from_millis(DEFAULT_TIMEOUT_MS),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            max_retries: 3,
            backoff: Duration::from_millis(250),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(cap: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            cap: cap.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.cap {
            n = self.freed.wait(n).expect("gate lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// JSON-over-HTTP POST endpoint with bounded concurrency and retries.
pub(crate) struct JsonEndpoint {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl JsonEndpoint {
    pub(crate) fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable {
                message: format!("cannot build HTTP client: {e}"),
                status: None,
                retryable: false,
            })?;
        Ok(Self {
            gate: Gate::new(config.max_in_flight),
            config,
            client,
        })
    }

    pub(crate) fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn attempt(&self, body: &Value) -> Result<Value, ProviderError> {
        let _permit = self.gate.acquire();
        let mut req = self.client.post(&self.config.url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Unavailable {
            message: e.to_string(),
            status: None,
            retryable: e.is_timeout(),
        })?;

        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(ProviderError::Unavailable {
                message: format!("HTTP {status}: {}", truncate(&text, 200)),
                status: Some(status.as_u16()),
                retryable: status.is_server_error(),
            });
        }
        resp.json::<Value>().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Unavailable {
                    message: e.to_string(),
                    status: None,
                    retryable: true,
                }
            } else {
                ProviderError::MalformedResponse(format!("response is not JSON: {e}"))
            }
        })
    }

    pub(crate) fn post(&self, body: &Value) -> Result<Value, ProviderError> {
        let mut delay = self.config.backoff;
        let mut retries = 0;
        loop {
            match self.attempt(body) {
                Err(e) if e.is_retryable() && retries < self.config.max_retries => {
                    log::warn!("retrying {} after error: {e}", self.config.url);
                    retries += 1;
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                other => return other,
            }
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
