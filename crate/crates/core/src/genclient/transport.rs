//! Blocking JSON-over-HTTP transport with bounded concurrency and
//! exponential-backoff retries.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AttemptRecord, Error, Result};

pub const ENV_ENDPOINT: &str = "ZOOSYNTH_BACKEND_URL";
pub const ENV_CHAT_ENDPOINT: &str = "ZOOSYNTH_CHAT_URL";
pub const ENV_DECODER_ENDPOINT: &str = "ZOOSYNTH_DECODER_URL";
pub const ENV_API_KEY: &str = "ZOOSYNTH_API_KEY";

fn default_timeout() -> f64 {
    300.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}
fn default_backoff_base() -> f64 {
    1.0
}
fn default_backoff_factor() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    #[serde(default)]
    pub model_id: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff_base")]
    pub backoff_base_secs: f64,
    #[serde(default = "default_backoff_factor")]
    pub backoff_factor: f64,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
}

impl BackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_id: String::new(),
            timeout_secs: default_timeout(),
            max_retries: default_max_retries(),
            max_in_flight: default_max_in_flight(),
            backoff_base_secs: default_backoff_base(),
            backoff_factor: default_backoff_factor(),
            api_key: None,
        }
    }

    /// Apply the endpoint variable `endpoint_var` and `ZOOSYNTH_API_KEY` when set.
    pub fn with_env_overrides(mut self, endpoint_var: &str) -> Self {
        if let Ok(url) = std::env::var(endpoint_var) {
            if !url.is_empty() {
                self.endpoint = url;
            }
        }
        if let Ok(key) = std::env::var(ENV_API_KEY) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight < 1 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0) || !(self.backoff_base_secs >= 0.0) || !(self.backoff_factor >= 1.0) {
            return Err(Error::Config(
                "timeout must be positive, backoff base non-negative, factor >= 1".into(),
            ));
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(Error::Config(format!(
                "endpoint {:?} is not an http(s) URL",
                self.endpoint
            )));
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let secs = self.backoff_base_secs * self.backoff_factor.powi(retry as i32 - 1);
        Duration::from_secs_f64(secs.min(600.0))
    }
}

/// Counting semaphore that also tracks its peak occupancy.
#[derive(Debug)]
pub struct InFlightLimiter {
    max: usize,
    state: Mutex<LimiterState>,
    cv: Condvar,
}

#[derive(Debug, Default, Clone, Copy)]
struct LimiterState {
    current: usize,
    peak: usize,
}

pub struct Permit<'a> {
    limiter: &'a InFlightLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.limiter.state.lock().unwrap();
        s.current -= 1;
        self.limiter.cv.notify_one();
    }
}

impl InFlightLimiter {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            state: Mutex::new(LimiterState::default()),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().unwrap();
        while s.current >= self.max {
            s = self.cv.wait(s).unwrap();
        }
        s.current += 1;
        s.peak = s.peak.max(s.current);
        Permit { limiter: self }
    }

    pub fn current(&self) -> usize {
        self.state.lock().unwrap().current
    }

    pub fn peak(&self) -> usize {
        self.state.lock().unwrap().peak
    }
}

/// Outcome of a successful call.
#[derive(Debug, Clone)]
pub struct CallOutcome<T> {
    pub value: T,
    pub attempts: u32,
}

/// A JSON service endpoint shared across workers.
#[derive(Debug, Clone)]
pub struct HttpService {
    config: BackendConfig,
    agent: ureq::Agent,
    limiter: Arc<InFlightLimiter>,
}

enum AttemptError {
    Retryable(String),
    Fatal(Error),
}

impl HttpService {
    pub fn new(config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = Arc::new(InFlightLimiter::new(config.max_in_flight));
        Ok(Self {
            config,
            agent,
            limiter,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn limiter(&self) -> &InFlightLimiter {
        &self.limiter
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    /// POST `body` to `path`, retrying 5xx responses and transport failures
    /// with exponential backoff. 4xx responses are returned immediately.
    pub fn post_json<B, T>(&self, path: &str, body: &B) -> Result<CallOutcome<T>>
    where
        B: Serialize + ?Sized,
        T: DeserializeOwned,
    {
        let url = self.url(path);
        let mut log = Vec::new();
        let total = self.config.max_retries + 1;
        for attempt in 1..=total {
            let result = {
                let _permit = self.limiter.acquire();
                self.attempt(&url, body)
            };
            match result {
                Ok(value) => {
                    if attempt > 1 {
                        log::info!("{url}: succeeded after {attempt} attempts");
                    }
                    return Ok(CallOutcome {
                        value,
                        attempts: attempt,
                    });
                }
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(outcome)) => {
                    log::warn!("{url}: attempt {attempt}/{total} failed: {outcome}");
                    log.push(AttemptRecord { attempt, outcome });
                    if attempt < total {
                        std::thread::sleep(self.config.backoff(attempt));
                    }
                }
            }
        }
        Err(Error::Backend {
            message: format!("{url}: retries exhausted"),
            attempts: log,
        })
    }

    fn attempt<B, T>(&self, url: &str, body: &B) -> std::result::Result<T, AttemptError>
    where
        B: Serialize + ?Sized,
        T: DeserializeOwned,
    {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let payload = serde_json::to_vec(body).map_err(|e| AttemptError::Fatal(e.into()))?;
        let mut resp = match req.send(&payload[..]) {
            Ok(r) => r,
            Err(e) => return Err(AttemptError::Retryable(format!("transport: {e}"))),
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(512 * 1024 * 1024)
            .read_to_string();
        match status {
            200..=299 => {
                let text = text.map_err(|e| AttemptError::Retryable(format!("reading body: {e}")))?;
                serde_json::from_str(&text).map_err(|e| {
                    AttemptError::Fatal(Error::Protocol(format!("malformed response from {url}: {e}")))
                })
            }
            400..=499 => Err(AttemptError::Fatal(Error::Request {
                status,
                body: text.unwrap_or_default(),
            })),
            500..=599 => Err(AttemptError::Retryable(format!("HTTP {status}"))),
            _ => Err(AttemptError::Fatal(Error::Protocol(format!(
                "unexpected HTTP status {status} from {url}"
            )))),
        }
    }
}
