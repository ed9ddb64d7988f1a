//! Question fan-out: one generation per requested bias, bounded
//! concurrency, per-bias deadline, answers in request order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use opinion_core::backend::{GenerationParams, Generator};
use opinion_core::prompt::RenderedPrompt;
use opinion_core::Bias;
use uuid::Uuid;

use crate::error::ServeError;
use crate::model::{
    AnswerStatus, AskRequest, AskResponse, BiasAnswer, Conversation, ConversationSummary, FieldError, Turn,
    MAX_QUESTION_CHARS,
};
use crate::store::{now, Store};

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub fan_out: usize,
    pub per_bias_timeout: Duration,
    pub params: GenerationParams,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            fan_out: 4,
            per_bias_timeout: Duration::from_secs(30),
            params: GenerationParams::default(),
        }
    }
}

pub struct Gateway {
    backend: Arc<dyn Generator>,
    overrides: HashMap<Bias, Arc<dyn Generator>>,
    store: Store,
    config: GatewayConfig,
    locks: Mutex<HashMap<Uuid, Arc<tokio::sync::Mutex<()>>>>,
}

struct Validated {
    question: String,
    biases: Vec<Bias>,
    conversation: Option<Uuid>,
    params: GenerationParams,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Generator>, store: Store, config: GatewayConfig) -> Self {
        Gateway {
            backend,
            overrides: HashMap::new(),
            store,
            config,
            locks: Mutex::new(HashMap::new()),
        }
    }

    /// Routes one bias to a different generator.
    pub fn with_backend(mut self, bias: Bias, backend: Arc<dyn Generator>) -> Self {
        self.overrides.insert(bias, backend);
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn validate(&self, req: &AskRequest) -> Result<Validated, ServeError> {
        let mut errors = Vec::new();
        let question = req.question.trim();
        if question.is_empty() {
            errors.push(FieldError::new("question", "must not be empty"));
        } else if question.chars().count() > MAX_QUESTION_CHARS {
            errors.push(FieldError::new("question", format!("must be at most {MAX_QUESTION_CHARS} characters")));
        }

        let mut biases = Vec::new();
        let mut unknown = Vec::new();
        for id in &req.bias_ids {
            match id.parse::<Bias>() {
                Ok(b) if !biases.contains(&b) => biases.push(b),
                Ok(_) => {}
                Err(_) => unknown.push(id.as_str()),
            }
        }
        if !unknown.is_empty() {
            errors.push(FieldError::new("bias_ids", format!("unknown bias ids: {}", unknown.join(", "))));
        } else if biases.is_empty() {
            errors.push(FieldError::new("bias_ids", "select at least one bias"));
        }

        let params = req.params.clone().unwrap_or_else(|| self.config.params.clone());
        if let Err(e) = params.validate() {
            match e {
                opinion_core::ValidationError::Field { field, message } => errors.push(FieldError::new(field, message)),
                other => errors.push(FieldError::new("params", other.to_string())),
            }
        }
        if !errors.is_empty() {
            return Err(ServeError::Validation(errors));
        }

        // An unparseable id is reported the same as a missing one.
        let conversation = match &req.conversation_id {
            None => None,
            Some(raw) => {
                let id = Uuid::parse_str(raw).map_err(|_| ServeError::NotFound)?;
                if !self.store.contains(id) {
                    return Err(ServeError::NotFound);
                }
                Some(id)
            }
        };
        Ok(Validated {
            question: question.to_string(),
            biases,
            conversation,
            params,
        })
    }

    fn lock_for(&self, id: Uuid) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(id).or_default().clone()
    }

    pub async fn ask(&self, req: AskRequest) -> Result<AskResponse, ServeError> {
        let v = self.validate(&req)?;
        let id = v.conversation.unwrap_or_else(Uuid::new_v4);
        // Serializes turns within a conversation; distinct ones proceed freely.
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;

        let asked_at = now();
        let answers: Vec<BiasAnswer> = stream::iter(v.biases.iter().copied())
            .map(|bias| self.answer(bias, &v.question, &v.params))
            .buffered(self.config.fan_out.max(1))
            .collect()
            .await;

        let turn = Turn {
            question: v.question,
            asked_at,
            answers: answers.clone(),
        };
        self.store.append_turn(id, turn)?;
        Ok(AskResponse {
            conversation_id: id,
            answers,
        })
    }

    async fn answer(&self, bias: Bias, question: &str, params: &GenerationParams) -> BiasAnswer {
        let subreddit = bias.serving_subreddit().to_string();
        let started = Instant::now();
        let backend = self.overrides.get(&bias).unwrap_or(&self.backend);
        let outcome = match RenderedPrompt::for_bias(bias, question) {
            Err(e) => Err(e.to_string()),
            Ok(prompt) => match tokio::time::timeout(self.config.per_bias_timeout, backend.generate(&prompt, params)).await {
                Err(_) => Err(format!("timed out after {} ms", self.config.per_bias_timeout.as_millis())),
                Ok(Err(e)) => Err(e.to_string()),
                Ok(Ok(c)) if c.text.trim().is_empty() => Err("empty completion".to_string()),
                Ok(Ok(c)) => Ok(c.text),
            },
        };
        let latency_ms = started.elapsed().as_millis() as u64;
        match outcome {
            Ok(text) => BiasAnswer {
                bias,
                subreddit_used: subreddit,
                text,
                status: AnswerStatus::Ok,
                error_detail: None,
                latency_ms,
            },
            Err(detail) => {
                tracing::warn!(bias = %bias, %detail, "generation failed");
                BiasAnswer {
                    bias,
                    subreddit_used: subreddit,
                    text: String::new(),
                    status: AnswerStatus::Error,
                    error_detail: Some(detail),
                    latency_ms,
                }
            }
        }
    }

    pub fn history(&self) -> Vec<ConversationSummary> {
        self.store.summaries()
    }

    pub fn conversation(&self, id: Uuid) -> Result<Conversation, ServeError> {
        self.store.get(id).ok_or(ServeError::NotFound)
    }

    pub fn share(&self, id: Uuid) -> Result<String, ServeError> {
        self.store.share(id)?.ok_or(ServeError::NotFound)
    }

    pub fn resolve_share(&self, token: &str) -> Result<Conversation, ServeError> {
        self.store.resolve_share(token).ok_or(ServeError::NotFound)
    }
}
