//! Completion backends.
//!
//! [`Generator`] is the single interface the serving and evaluation layers
//! talk to. Two implementations ship: [`RemoteBackend`] posts prompts to an
//! external completion endpoint, and [`RetrievalBackend`] answers offline
//! from a corpus by nearest-instruction lookup.

use std::fmt;
use std::str::FromStr;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ValidationError;
use crate::prompt::{completion_stop_sequences, RenderedPrompt};

pub mod remote;
pub mod retrieval;

pub use remote::{RemoteBackend, RemoteConfig};
pub use retrieval::{tokenize, CorpusIndex, Retrieved, RetrievalBackend};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("endpoint answered with status {status}: {body}")]
    Protocol { status: u16, body: String },
    #[error("no corpus loaded for r/{0}")]
    NoCorpus(String),
    #[error("malformed endpoint response: {0}")]
    InvalidResponse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Retrieval,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Remote => "remote",
            BackendKind::Retrieval => "retrieval",
        })
    }
}

impl FromStr for BackendKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "retrieval" => Ok(BackendKind::Retrieval),
            other => Err(ValidationError::field("backend", format!("unknown backend {other:?}"))),
        }
    }
}

fn default_max_tokens() -> u32 {
    256
}

fn default_temperature() -> f64 {
    0.7
}

fn default_stop() -> Vec<String> {
    completion_stop_sequences(None)
}

/// Decoding parameters sent with each request. The retrieval backend
/// ignores everything but `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_stop")]
    pub stop: Vec<String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            max_tokens: default_max_tokens(),
            temperature: default_temperature(),
            stop: default_stop(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.max_tokens < 1 {
            return Err(ValidationError::field("params.max_tokens", "must be at least 1"));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ValidationError::field("params.temperature", "must be a non-negative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    /// Text cut at the first stop sequence and trimmed.
    pub text: String,
    pub backend: BackendKind,
    pub latency_ms: u64,
}

#[async_trait]
pub trait Generator: Send + Sync {
    fn kind(&self) -> BackendKind;

    async fn generate(&self, prompt: &RenderedPrompt, params: &GenerationParams) -> Result<Completion, BackendError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_defaults_and_validation() {
        let p: GenerationParams = serde_json::from_str("{}").unwrap();
        assert_eq!(p, GenerationParams::default());
        assert_eq!(p.stop, vec!["---".to_string()]);
        assert!(p.validate().is_ok());
        let bad = GenerationParams {
            max_tokens: 0,
            ..GenerationParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenerationParams {
            temperature: -0.1,
            ..GenerationParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn backend_kind_parsing() {
        assert_eq!("remote".parse::<BackendKind>().unwrap(), BackendKind::Remote);
        assert_eq!("retrieval".parse::<BackendKind>().unwrap(), BackendKind::Retrieval);
        assert!("gpt".parse::<BackendKind>().is_err());
    }
}
