//! Client for an external completion endpoint.
//!
//! The native wire format is a single POST of
//! `{"prompt", "max_tokens", "temperature", "stop"}` answered by `{"text"}`.
//! With `openai_compat` set the body gains a `model` field and the answer is
//! read from `choices[0].text`, as served by OpenAI-style `/v1/completions`
//! endpoints.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::{BackendError, BackendKind, Completion, GenerationParams, Generator};
use crate::prompt::{truncate_at_stop, RenderedPrompt};

pub const ENV_ENDPOINT_URL: &str = "OPINION_ENDPOINT_URL";
pub const ENV_ENDPOINT_TOKEN: &str = "OPINION_ENDPOINT_TOKEN";

#[derive(Clone)]
pub struct RemoteConfig {
    pub url: String,
    /// Sent as a bearer token. Never printed.
    pub token: Option<String>,
    pub openai_compat: bool,
    pub model: Option<String>,
    /// Deadline for one `generate` call, retries included.
    pub timeout: Duration,
    pub retries: u32,
    pub initial_backoff: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            token: None,
            openai_compat: false,
            model: None,
            timeout: Duration::from_secs(30),
            retries: 2,
            initial_backoff: Duration::from_millis(250),
            max_in_flight: 8,
        }
    }
}

impl fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("url", &self.url)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("openai_compat", &self.openai_compat)
            .field("model", &self.model)
            .field("timeout", &self.timeout)
            .field("retries", &self.retries)
            .field("initial_backoff", &self.initial_backoff)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct NativeResponse {
    text: String,
}

#[derive(Deserialize)]
struct CompatChoice {
    text: String,
}

#[derive(Deserialize)]
struct CompatResponse {
    choices: Vec<CompatChoice>,
}

enum Attempt {
    Retry(BackendError),
    Fail(BackendError),
}

pub struct RemoteBackend {
    client: reqwest::Client,
    config: RemoteConfig,
    in_flight: Arc<Semaphore>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let in_flight = Arc::new(Semaphore::new(config.max_in_flight.max(1)));
        Ok(RemoteBackend {
            client,
            config,
            in_flight,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    async fn attempt(&self, prompt: &str, params: &GenerationParams) -> Result<String, Attempt> {
        let body = CompletionRequest {
            model: if self.config.openai_compat {
                self.config.model.as_deref()
            } else {
                None
            },
            prompt,
            max_tokens: params.max_tokens,
            temperature: params.temperature,
            stop: &params.stop,
        };
        let mut request = self.client.post(&self.config.url).json(&body);
        if let Some(token) = &self.config.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .await
            .map_err(|e| Attempt::Retry(BackendError::Unavailable(e.to_string())))?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            let err = BackendError::Protocol {
                status: status.as_u16(),
                body: body.chars().take(200).collect(),
            };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            });
        }
        let bytes = response
            .bytes()
            .await
            .map_err(|e| Attempt::Retry(BackendError::Unavailable(e.to_string())))?;
        let invalid = |e: serde_json::Error| Attempt::Fail(BackendError::InvalidResponse(e.to_string()));
        if self.config.openai_compat {
            let parsed: CompatResponse = serde_json::from_slice(&bytes).map_err(invalid)?;
            parsed
                .choices
                .into_iter()
                .next()
                .map(|c| c.text)
                .ok_or_else(|| Attempt::Fail(BackendError::InvalidResponse("no choices".into())))
        } else {
            let parsed: NativeResponse = serde_json::from_slice(&bytes).map_err(invalid)?;
            Ok(parsed.text)
        }
    }

    async fn with_retries(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(prompt, params).await {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= self.config.retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    tracing::debug!(attempt, error = %e, "retrying completion request");
                    tokio::time::sleep(backoff).await;
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[async_trait]
impl Generator for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    async fn generate(&self, prompt: &RenderedPrompt, params: &GenerationParams) -> Result<Completion, BackendError> {
        let started = Instant::now();
        let deadline = self.config.timeout;
        let work = async {
            let _permit = self
                .in_flight
                .acquire()
                .await
                .map_err(|_| BackendError::Unavailable("client shut down".into()))?;
            self.with_retries(&prompt.text, params).await
        };
        let raw = tokio::time::timeout(deadline, work)
            .await
            .map_err(|_| BackendError::Unavailable(format!("no answer within {deadline:?}")))??;
        Ok(Completion {
            text: truncate_at_stop(&raw, &params.stop).to_string(),
            backend: BackendKind::Remote,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
