use serde::{Deserialize, Serialize};

use crate::providers::{ChatMessage, Role};

/// Canonical system message for conversations that involve images.
pub const SYSTEM_PROMPT_V1: &str = include_str!("../../templates/chat_system_v1.txt");

/// Prior messages forwarded with each new turn.
pub const DEFAULT_HISTORY_WINDOW: usize = 20;

/// One conversation. `turns` holds alternating user and assistant messages;
/// the system message is derived per request and never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub turns: Vec<ChatMessage>,
    /// Descriptions attached to each user turn, in turn order.
    pub attached_descriptions: Vec<Vec<String>>,
}

impl ChatSession {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            ..Self::default()
        }
    }

    pub fn description_count(&self) -> usize {
        self.attached_descriptions.iter().map(Vec::len).sum()
    }

    /// Record a completed exchange.
    pub fn push_exchange(&mut self, user: ChatMessage, reply: String, descriptions: Vec<String>) {
        debug_assert_eq!(user.role, Role::User);
        self.turns.push(user);
        self.turns.push(ChatMessage::assistant(reply));
        self.attached_descriptions.push(descriptions);
    }
}

/// Content of the user message: numbered description lines, a blank line,
/// then the question. Numbering continues from `first_number`.
pub fn compose_user_content(user_text: &str, descriptions: &[String], first_number: usize) -> String {
    if descriptions.is_empty() {
        return user_text.to_string();
    }
    let mut out = String::new();
    for (i, d) in descriptions.iter().enumerate() {
        out.push_str(&format!("Image {}: {}\n", first_number + i, d));
    }
    out.push('\n');
    out.push_str(user_text);
    out
}

/// Messages for the next turn: the system message when any image is part of
/// the conversation, the most recent `window` prior messages, then the new
/// user message.
pub fn build_chat_prompt_windowed(
    session: &ChatSession,
    user_text: &str,
    new_descriptions: &[String],
    window: usize,
) -> Vec<ChatMessage> {
    let prior = session.description_count();
    let mut messages = Vec::with_capacity(window + 2);
    if prior > 0 || !new_descriptions.is_empty() {
        messages.push(ChatMessage::system(SYSTEM_PROMPT_V1.trim_end()));
    }
    let skip = session.turns.len().saturating_sub(window);
    messages.extend(session.turns[skip..].iter().cloned());
    messages.push(ChatMessage::user(compose_user_content(
        user_text,
        new_descriptions,
        prior + 1,
    )));
    messages
}

pub fn build_chat_prompt(
    session: &ChatSession,
    user_text: &str,
    new_descriptions: &[String],
) -> Vec<ChatMessage> {
    build_chat_prompt_windowed(session, user_text, new_descriptions, DEFAULT_HISTORY_WINDOW)
}
