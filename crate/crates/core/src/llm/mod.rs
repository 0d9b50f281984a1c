//! Chat transcripts, prompt templates, completion backends and response
//! post-processing.

mod backend;
mod extract;
mod http;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, CompletionBackend, QueryKey, RecordingBackend, ReplayBackend};
pub use extract::extract_code;
pub use http::{HttpBackend, HttpConfig};
pub use prompt::{fence, render_prompt, PromptKind, PromptTemplates, SYSTEM_PROMPT};

use crate::corpus::{ByteRatioEstimator, TokenEstimator};
use crate::preprocess::SourceUnit;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt template requires slot `{0}`")]
    MissingSlot(String),

    #[error("response contains no code")]
    EmptyExtraction,

    #[error("transcript does not end with a user message")]
    NotAwaitingReply,

    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// Content is never empty; an empty string is replaced by a single space so
/// that every message survives a round trip through chat APIs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        let mut content = content.into();
        if content.is_empty() {
            content.push(' ');
        }
        ChatMessage { role, content }
    }
}

/// Append-only conversation log. `context_start` marks where the request
/// window begins after a history truncation; earlier messages stay in the log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    messages: Vec<ChatMessage>,
    total_queries: u32,
    context_start: usize,
    truncations: u32,
}

impl Transcript {
    pub fn new(system: ChatMessage) -> Self {
        debug_assert_eq!(system.role, Role::System);
        Transcript {
            messages: vec![system],
            total_queries: 0,
            context_start: 1,
            truncations: 0,
        }
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn total_queries(&self) -> u32 {
        self.total_queries
    }

    pub fn truncations(&self) -> u32 {
        self.truncations
    }

    pub fn last(&self) -> Option<&ChatMessage> {
        self.messages.last()
    }

    /// Appends a message. A second System message is refused.
    pub fn push(&mut self, msg: ChatMessage) {
        assert_ne!(msg.role, Role::System, "system message is set once");
        if msg.role == Role::Assistant {
            self.total_queries += 1;
        }
        self.messages.push(msg);
    }

    /// Messages sent with the next request: the system prompt followed by
    /// everything since the last truncation.
    pub fn request_window(&self) -> Vec<ChatMessage> {
        let mut out = Vec::with_capacity(1 + self.messages.len() - self.context_start);
        out.push(self.messages[0].clone());
        out.extend_from_slice(&self.messages[self.context_start..]);
        out
    }

    pub fn window_tokens(&self, est: &dyn TokenEstimator) -> usize {
        est.estimate(&self.messages[0].content)
            + self.messages[self.context_start..]
                .iter()
                .map(|m| est.estimate(&m.content))
                .sum::<usize>()
    }

    /// Restarts the request window at the latest user message.
    pub fn truncate_history(&mut self) {
        if let Some(i) = self.messages.iter().rposition(|m| m.role == Role::User) {
            if i > self.context_start {
                self.context_start = i;
                self.truncations += 1;
            }
        }
    }
}

pub fn admit_with(unit: &SourceUnit, system_prompt: &str, context_limit: usize, est: &dyn TokenEstimator) -> bool {
    assert!(context_limit > 0, "context limit must be positive");
    // compare doubled sides so odd limits are not rounded down
    2 * (est.estimate(&unit.code) + est.estimate(system_prompt)) < context_limit
}

pub fn admit(unit: &SourceUnit, system_prompt: &str, context_limit: usize) -> bool {
    admit_with(unit, system_prompt, context_limit, &ByteRatioEstimator::default())
}

/// Sends the request window to `backend` and returns the reply. The caller
/// appends it.
pub fn complete(transcript: &Transcript, backend: &dyn CompletionBackend, key: &QueryKey) -> Result<ChatMessage, LlmError> {
    if transcript.last().map(|m| m.role) != Some(Role::User) {
        return Err(LlmError::NotAwaitingReply);
    }
    let text = backend.complete(key, &transcript.request_window())?;
    Ok(ChatMessage::new(Role::Assistant, text))
}
