//! HTTP clients for the provider contracts.
//!
//! All clients share one transport policy: a per-request timeout, bounded
//! retries with exponential backoff on network failures and 5xx responses, and
//! a minimum spacing between requests to the same provider.

mod chat;
mod encoder;
mod search;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use chat::{chat_request_body, ChatClientConfig, HttpChat};
pub use encoder::{EncoderClientConfig, HttpEncoder};
pub use search::{HttpWebSearch, WebSearchClientConfig};

use super::ProviderError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub timeout_ms: u64,
    /// Attempts after the first.
    pub retries: u32,
    /// Delay before the first retry; doubles for each later one.
    pub backoff_ms: u64,
    /// Minimum spacing between request starts; 0 disables rate limiting.
    pub min_interval_ms: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 250,
            min_interval_ms: 0,
        }
    }
}

impl HttpSettings {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn backoff(&self, retry: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1 << retry.min(16)))
    }
}

/// Spaces request starts at least `interval` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self {
            interval,
            next: Mutex::new(None),
        }
    }

    pub async fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next.lock().unwrap();
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            tokio::time::sleep(wait).await;
        }
    }
}

#[derive(Debug)]
pub(crate) struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn rejected(&self) -> ProviderError {
        ProviderError::ProviderRejected {
            status: self.status,
            body: self.text(),
        }
    }
}

#[derive(Debug)]
pub(crate) struct Transport {
    client: reqwest::Client,
    settings: HttpSettings,
    limiter: RateLimiter,
}

impl Transport {
    pub fn new(settings: HttpSettings) -> Result<Self, ProviderError> {
        let client = reqwest::Client::builder()
            .timeout(settings.timeout())
            .build()
            .map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
        Ok(Self {
            client,
            limiter: RateLimiter::new(Duration::from_millis(settings.min_interval_ms)),
            settings,
        })
    }

    /// Send the request built by `build`, retrying transient failures.
    ///
    /// Non-5xx responses are returned as-is for the caller to classify; a 5xx
    /// that survives every retry becomes `ProviderRejected`.
    pub async fn send(
        &self,
        build: impl Fn(&reqwest::Client) -> reqwest::RequestBuilder,
    ) -> Result<Reply, ProviderError> {
        let mut last = None;
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                tokio::time::sleep(self.settings.backoff(attempt - 1)).await;
            }
            self.limiter.acquire().await;
            let outcome = match build(&self.client).send().await {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    resp.bytes()
                        .await
                        .map(|b| Reply {
                            status,
                            body: b.to_vec(),
                        })
                        .map_err(unavailable)
                }
                Err(e) if e.is_builder() => {
                    return Err(ProviderError::InvalidRequest(e.to_string()))
                }
                Err(e) => Err(unavailable(e)),
            };
            match outcome {
                Ok(reply) if reply.status >= 500 => {
                    tracing::debug!(status = reply.status, attempt, "provider server error");
                    last = Some(reply.rejected());
                }
                Ok(reply) => return Ok(reply),
                Err(err) => {
                    tracing::debug!(%err, attempt, "provider request failed");
                    last = Some(err);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

fn unavailable(e: reqwest::Error) -> ProviderError {
    let kind = if e.is_timeout() {
        "timed out"
    } else if e.is_connect() {
        "connection failed"
    } else {
        "transport error"
    };
    ProviderError::ProviderUnavailable(format!("{kind}: {e}"))
}

/// `base` joined with `path` by exactly one slash.
pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
