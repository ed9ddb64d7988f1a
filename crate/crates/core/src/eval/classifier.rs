//! Text classifiers that label completions for the evaluation harness.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Label;
use crate::backend::tokenize;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("classifier unavailable: {0}")]
    Unavailable(String),
    #[error("classifier answered with status {0}")]
    Protocol(u16),
    #[error("malformed classifier response: {0}")]
    InvalidResponse(String),
    #[error("cannot load lexicon {path}: {message}")]
    Lexicon { path: String, message: String },
}

#[async_trait]
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;

    async fn classify(&self, text: &str) -> Result<Label, ClassifierError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Token → polarity table. Tokens are matched after the same lowercasing
/// and alphanumeric-run splitting used for retrieval.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon(HashMap<String, Polarity>);

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Polarity)>,
        S: Into<String>,
    {
        Lexicon(entries.into_iter().map(|(k, v)| (k.into().to_lowercase(), v)).collect())
    }

    /// Reads a JSON object mapping tokens to `"positive"` or `"negative"`.
    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let err = |message: String| ClassifierError::Lexicon {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let raw: HashMap<String, Polarity> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(Lexicon::new(raw))
    }

    pub fn get(&self, token: &str) -> Option<Polarity> {
        self.0.get(token).copied()
    }
}

/// Majority vote of matched tokens; no matches or a tie is neutral.
pub fn lexicon_classify(text: &str, lexicon: &Lexicon) -> Label {
    let (mut pos, mut neg) = (0usize, 0usize);
    for token in tokenize(text) {
        match lexicon.get(&token) {
            Some(Polarity::Positive) => pos += 1,
            Some(Polarity::Negative) => neg += 1,
            None => {}
        }
    }
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Label::Positive,
        std::cmp::Ordering::Less => Label::Negative,
        std::cmp::Ordering::Equal => Label::Neutral,
    }
}

pub struct LexiconClassifier {
    lexicon: Lexicon,
}

impl LexiconClassifier {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconClassifier { lexicon }
    }
}

#[async_trait]
impl Classifier for LexiconClassifier {
    fn name(&self) -> &str {
        "lexicon"
    }

    async fn classify(&self, text: &str) -> Result<Label, ClassifierError> {
        Ok(lexicon_classify(text, &self.lexicon))
    }
}

/// Classifier service speaking `POST {"text"}` → `{"label"}`.
pub struct RemoteClassifier {
    client: reqwest::Client,
    url: String,
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    label: Label,
}

impl RemoteClassifier {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ClassifierError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClassifierError::Unavailable(e.to_string()))?;
        Ok(RemoteClassifier { client, url: url.into() })
    }
}

#[async_trait]
impl Classifier for RemoteClassifier {
    fn name(&self) -> &str {
        &self.url
    }

    async fn classify(&self, text: &str) -> Result<Label, ClassifierError> {
        let response = self
            .client
            .post(&self.url)
            .json(&ClassifyRequest { text })
            .send()
            .await
            .map_err(|e| ClassifierError::Unavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(ClassifierError::Protocol(response.status().as_u16()));
        }
        let bytes = response
            .bytes()
            .await
            .map_err(|e| ClassifierError::Unavailable(e.to_string()))?;
        let parsed: ClassifyResponse =
            serde_json::from_slice(&bytes).map_err(|e| ClassifierError::InvalidResponse(e.to_string()))?;
        Ok(parsed.label)
    }
}
