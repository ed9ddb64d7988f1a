//! Wire and storage types.

use chrono::{DateTime, Utc};
use opinion_core::backend::GenerationParams;
use opinion_core::Bias;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

pub const MAX_QUESTION_CHARS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasAnswer {
    pub bias: Bias,
    pub subreddit_used: String,
    pub text: String,
    pub status: AnswerStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub question: String,
    pub asked_at: DateTime<Utc>,
    pub answers: Vec<BiasAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share_token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationSummary {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    /// First question asked.
    pub title: String,
    pub turn_count: usize,
    pub shared: bool,
}

impl ConversationSummary {
    pub fn of(c: &Conversation) -> Self {
        ConversationSummary {
            id: c.id,
            created_at: c.created_at,
            updated_at: c.turns.last().map_or(c.created_at, |t| t.asked_at),
            title: c.turns.first().map(|t| t.question.clone()).unwrap_or_default(),
            turn_count: c.turns.len(),
            shared: c.share_token.is_some(),
        }
    }
}

/// What a share link shows. The conversation id is left out: knowing it
/// would let the holder append turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedConversation {
    pub created_at: DateTime<Utc>,
    pub turns: Vec<Turn>,
}

impl From<Conversation> for SharedConversation {
    fn from(c: Conversation) -> Self {
        SharedConversation {
            created_at: c.created_at,
            turns: c.turns,
        }
    }
}

/// Bias ids arrive as raw strings so unknown ones can be reported by name.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AskRequest {
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub bias_ids: Vec<String>,
    #[serde(default)]
    pub conversation_id: Option<String>,
    #[serde(default)]
    pub params: Option<GenerationParams>,
}

impl AskRequest {
    pub fn new(question: impl Into<String>, biases: &[Bias]) -> Self {
        AskRequest {
            question: question.into(),
            bias_ids: biases.iter().map(|b| b.id().to_string()).collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub conversation_id: Uuid,
    pub answers: Vec<BiasAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShareResponse {
    pub share_token: String,
}
