//! Bias-conditioning prompt template.
//!
//! The subreddit name is repeated three times on a header line before the
//! instruction, and three times again before `Response:`:
//!
//! ```text
//! --- {subreddit} {subreddit} {subreddit}
//!
//! Instruction: {instruction}
//!
//!
//! --- {subreddit} {subreddit} {subreddit} Response:
//! ```
//!
//! There is no trailing newline. Training examples append a single space and
//! the response to the inference prompt.

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::registry::{source_for_subreddit, Bias};

/// Delimiter that opens every turn; generation stops when the model emits it.
pub const TURN_DELIMITER: &str = "---";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    /// The registry bias owning `subreddit`, if it is a registry subreddit.
    pub bias: Option<Bias>,
    pub subreddit: String,
    pub text: String,
}

impl RenderedPrompt {
    /// Renders for a bias using its serving subreddit.
    pub fn for_bias(bias: Bias, instruction: &str) -> Result<Self, ValidationError> {
        let mut prompt = render_inference(bias.serving_subreddit(), instruction)?;
        prompt.bias = Some(bias);
        Ok(prompt)
    }

    /// The instruction text embedded in the prompt.
    pub fn instruction(&self) -> &str {
        let after = self
            .text
            .split_once("\n\nInstruction: ")
            .map(|(_, rest)| rest)
            .unwrap_or_default();
        after.rsplit_once("\n\n\n").map(|(i, _)| i).unwrap_or(after)
    }
}

fn check_instruction(instruction: &str) -> Result<(), ValidationError> {
    if instruction.is_empty() {
        return Err(ValidationError::EmptyInstruction);
    }
    if instruction.trim() != instruction {
        return Err(ValidationError::UntrimmedInstruction);
    }
    Ok(())
}

fn check_subreddit(subreddit: &str) -> Result<(), ValidationError> {
    if subreddit.is_empty() || subreddit.chars().any(char::is_whitespace) {
        return Err(ValidationError::field("subreddit", "must be a nonempty name without whitespace"));
    }
    Ok(())
}

fn header(subreddit: &str) -> String {
    format!("{TURN_DELIMITER} {subreddit} {subreddit} {subreddit}")
}

/// The prompt used at inference time.
pub fn render_inference(subreddit: &str, instruction: &str) -> Result<RenderedPrompt, ValidationError> {
    check_subreddit(subreddit)?;
    check_instruction(instruction)?;
    let head = header(subreddit);
    let text = format!("{head}\n\nInstruction: {instruction}\n\n\n{head} Response:");
    Ok(RenderedPrompt {
        bias: source_for_subreddit(subreddit).map(|s| s.bias),
        subreddit: subreddit.to_string(),
        text,
    })
}

/// The serialized training example: the inference prompt, one space, then
/// the response.
pub fn render_training(subreddit: &str, instruction: &str, response: &str) -> Result<String, ValidationError> {
    if response.trim().is_empty() {
        return Err(ValidationError::EmptyResponse);
    }
    let prompt = render_inference(subreddit, instruction)?;
    Ok(format!("{} {response}", prompt.text))
}

/// Sequences at which a completion is cut off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopSequences(Vec<String>);

impl Default for StopSequences {
    fn default() -> Self {
        StopSequences(vec![TURN_DELIMITER.to_string()])
    }
}

impl StopSequences {
    /// The turn delimiter plus an optional backend end-of-text sentinel.
    pub fn with_sentinel(sentinel: Option<&str>) -> Self {
        let mut stops = Self::default();
        if let Some(s) = sentinel.filter(|s| !s.is_empty()) {
            stops.0.push(s.to_string());
        }
        stops
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    /// Cuts `text` at the earliest stop sequence and trims whitespace.
    pub fn apply<'a>(&self, text: &'a str) -> &'a str {
        truncate_at_stop(text, &self.0)
    }
}

impl From<Vec<String>> for StopSequences {
    fn from(v: Vec<String>) -> Self {
        StopSequences(v)
    }
}

pub fn completion_stop_sequences(sentinel: Option<&str>) -> Vec<String> {
    StopSequences::with_sentinel(sentinel).0
}

pub fn truncate_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    text[..cut].trim()
}
