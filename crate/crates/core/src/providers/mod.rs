//! Client contracts for the external capabilities the engine depends on:
//! a chat LLM, web image search, the encoder sidecar and language detection.
//!
//! Each contract has an HTTP client for real deployments and a deterministic
//! mock used throughout the test suites.

pub mod http;
mod langid;
pub mod mock;

use std::fmt;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use langid::NgramDetector;

use crate::repr::{Dims, Representation};

/// Token limit of the text encoder's context window.
pub const ENCODER_TOKEN_LIMIT: usize = 77;

/// Results requested from web search when the caller does not say otherwise.
pub const DEFAULT_SEARCH_COUNT: usize = 40;

pub const MAX_SEARCH_COUNT: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("provider rejected the request with status {status}: {body}")]
    ProviderRejected { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("provider quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("unsupported payload: {0}")]
    UnsupportedPayload(String),
    #[error("text is empty")]
    EmptyText,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
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

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub temperature: f32,
}

impl ChatParams {
    /// Deterministic settings for translation and summarization.
    pub const PRECISE: ChatParams = ChatParams { temperature: 0.0 };
}

impl Default for ChatParams {
    fn default() -> Self {
        Self { temperature: 0.7 }
    }
}

/// Checks shared by every chat provider.
pub fn validate_messages(messages: &[ChatMessage]) -> Result<(), ProviderError> {
    match messages.last() {
        None => Err(ProviderError::InvalidRequest("no messages".into())),
        Some(m) if m.role != Role::User => Err(ProviderError::InvalidRequest(
            "last message must come from the user".into(),
        )),
        Some(_) => Ok(()),
    }
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn chat(&self, messages: &[ChatMessage], params: ChatParams)
        -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebSearchResult {
    pub image_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_bytes: Option<Vec<u8>>,
    pub title: String,
    /// 1-based position in the provider's ordering.
    pub source_rank: usize,
}

pub fn validate_search(query: &str, count: usize) -> Result<(), ProviderError> {
    if query.trim().is_empty() {
        return Err(ProviderError::EmptyText);
    }
    if !(1..=MAX_SEARCH_COUNT).contains(&count) {
        return Err(ProviderError::InvalidRequest(format!(
            "count must lie in 1..={MAX_SEARCH_COUNT}, got {count}"
        )));
    }
    Ok(())
}

#[async_trait]
pub trait WebSearch: Send + Sync {
    /// Up to `count` results ordered by ascending `source_rank`.
    async fn search(&self, query: &str, count: usize)
        -> Result<Vec<WebSearchResult>, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderInput<'a> {
    Text(&'a str),
    Image(&'a [u8]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ImageFormat::Png => "image/png",
            ImageFormat::Jpeg => "image/jpeg",
        }
    }
}

/// Identify a JPEG or PNG payload by its signature.
pub fn sniff_image(bytes: &[u8]) -> Result<ImageFormat, ProviderError> {
    const PNG: &[u8] = b"\x89PNG\r\n\x1a\n";
    if bytes.is_empty() {
        Err(ProviderError::UnsupportedPayload("empty image".into()))
    } else if bytes.starts_with(PNG) {
        Ok(ImageFormat::Png)
    } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        Ok(ImageFormat::Jpeg)
    } else {
        Err(ProviderError::UnsupportedPayload(
            "not a JPEG or PNG image".into(),
        ))
    }
}

/// Reject payloads no encoder accepts.
pub fn validate_encoder_input(input: EncoderInput<'_>) -> Result<(), ProviderError> {
    match input {
        EncoderInput::Text(t) if t.trim().is_empty() => {
            Err(ProviderError::UnsupportedPayload("empty text".into()))
        }
        EncoderInput::Text(_) => Ok(()),
        EncoderInput::Image(bytes) => sniff_image(bytes).map(|_| ()),
    }
}

/// Whitespace token count.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// First `limit` whitespace tokens joined by single spaces.
pub fn whitespace_truncate(text: &str, limit: usize) -> String {
    text.split_whitespace()
        .take(limit)
        .collect::<Vec<_>>()
        .join(" ")
}

#[async_trait]
pub trait Encoder: Send + Sync {
    fn dims(&self) -> Dims;

    async fn encode(&self, input: EncoderInput<'_>) -> Result<Representation, ProviderError>;

    /// Tokens the text encoder would consume for `text`.
    fn count_tokens(&self, text: &str) -> usize {
        whitespace_tokens(text)
    }

    /// Longest prefix of `text` within `limit` tokens.
    fn truncate_tokens(&self, text: &str, limit: usize) -> String {
        whitespace_truncate(text, limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedLanguage {
    /// ISO 639-1 code, or "und" when the text has no letters.
    pub lang_code: String,
    pub confidence: f64,
}

impl DetectedLanguage {
    pub const UNDETERMINED: &'static str = "und";

    pub fn is_english(&self) -> bool {
        self.lang_code == "en"
    }
}

pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> Result<DetectedLanguage, ProviderError>;
}

#[cfg(test)]
mod tests;
