//! Deterministic in-process providers.
//!
//! Every mock is a pure function of its configuration and input, records the
//! requests it receives, and can be switched into a failure mode.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    validate_encoder_input, validate_messages, validate_search, ChatMessage, ChatParams,
    ChatProvider, Encoder, EncoderInput, ProviderError, Role, WebSearch, WebSearchResult,
};
use crate::repr::{Dims, Representation};
use crate::synth::random_representation;

/// A PNG-signed payload carrying `content`; enough for any mock encoder.
pub fn fake_png(content: &[u8]) -> Vec<u8> {
    let mut bytes = b"\x89PNG\r\n\x1a\n".to_vec();
    bytes.extend_from_slice(content);
    bytes
}

/// A JPEG-signed payload carrying `content`.
pub fn fake_jpeg(content: &[u8]) -> Vec<u8> {
    let mut bytes = vec![0xFF, 0xD8, 0xFF, 0xE0];
    bytes.extend_from_slice(content);
    bytes
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedChat {
    pub messages: Vec<ChatMessage>,
    pub params: ChatParams,
}

pub type Responder = dyn Fn(&[ChatMessage]) -> Result<String, ProviderError> + Send + Sync;

#[derive(Clone)]
enum Fallback {
    Echo,
    Respond(Arc<Responder>),
}

/// Chat mock: replies from a canned map keyed by the final user message,
/// otherwise echoes that message or defers to a responder function.
pub struct MockChat {
    canned: HashMap<String, String>,
    fallback: Fallback,
    failure: Mutex<Option<ProviderError>>,
    log: Mutex<Vec<RecordedChat>>,
}

impl std::fmt::Debug for MockChat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockChat")
            .field("canned", &self.canned.len())
            .field("calls", &self.calls())
            .finish()
    }
}

impl Default for MockChat {
    fn default() -> Self {
        Self::echo()
    }
}

impl MockChat {
    pub fn echo() -> Self {
        Self {
            canned: HashMap::new(),
            fallback: Fallback::Echo,
            failure: Mutex::new(None),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn canned(map: HashMap<String, String>) -> Self {
        Self {
            canned: map,
            ..Self::echo()
        }
    }

    pub fn with_responder(
        f: impl Fn(&[ChatMessage]) -> Result<String, ProviderError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            fallback: Fallback::Respond(Arc::new(f)),
            ..Self::echo()
        }
    }

    pub fn with_reply(mut self, prompt: impl Into<String>, reply: impl Into<String>) -> Self {
        self.canned.insert(prompt.into(), reply.into());
        self
    }

    /// Fail every subsequent call with `err` until cleared.
    pub fn fail_with(&self, err: Option<ProviderError>) {
        *self.failure.lock().unwrap() = err;
    }

    pub fn calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<RecordedChat> {
        self.log.lock().unwrap().clone()
    }

    pub fn reset(&self) {
        self.log.lock().unwrap().clear();
    }
}

#[async_trait]
impl ChatProvider for MockChat {
    async fn chat(
        &self,
        messages: &[ChatMessage],
        params: ChatParams,
    ) -> Result<String, ProviderError> {
        validate_messages(messages)?;
        self.log.lock().unwrap().push(RecordedChat {
            messages: messages.to_vec(),
            params,
        });
        if let Some(err) = self.failure.lock().unwrap().clone() {
            return Err(err);
        }
        let last = &messages[messages.len() - 1];
        debug_assert_eq!(last.role, Role::User);
        if let Some(reply) = self.canned.get(&last.content) {
            return Ok(reply.clone());
        }
        match &self.fallback {
            Fallback::Echo => Ok(last.content.clone()),
            Fallback::Respond(f) => f(messages),
        }
    }
}

fn input_key(input: EncoderInput<'_>) -> [u8; 32] {
    let (tag, bytes) = match input {
        EncoderInput::Text(t) => (b'T', t.as_bytes()),
        EncoderInput::Image(b) => (b'I', b),
    };
    let mut h = Sha256::new();
    h.update([tag]);
    h.update(bytes);
    h.finalize().into()
}

/// Encoder mock seeded by a content hash; the global vector has unit norm.
#[derive(Debug)]
pub struct MockEncoder {
    dims: Dims,
    seed: u64,
    fixtures: HashMap<[u8; 32], Representation>,
    failure: Mutex<Option<ProviderError>>,
    calls: AtomicUsize,
}

impl MockEncoder {
    pub fn new(dims: Dims, seed: u64) -> Self {
        Self {
            dims,
            seed,
            fixtures: HashMap::new(),
            failure: Mutex::new(None),
            calls: AtomicUsize::new(0),
        }
    }

    /// Pin the encoding of `input`.
    pub fn with_fixture(mut self, input: EncoderInput<'_>, repr: Representation) -> Self {
        self.fixtures.insert(input_key(input), repr);
        self
    }

    pub fn fail_with(&self, err: Option<ProviderError>) {
        *self.failure.lock().unwrap() = err;
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    /// The encoding `encode` returns for a valid `input`, computed synchronously.
    pub fn representation_of(&self, input: EncoderInput<'_>) -> Representation {
        let key = input_key(input);
        if let Some(r) = self.fixtures.get(&key) {
            return r.clone();
        }
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(key);
        let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
        let mut repr = random_representation(&mut rng, self.dims);
        let norm = repr.global.iter().map(|v| v * v).sum::<f32>().sqrt();
        repr.global.iter_mut().for_each(|v| *v /= norm);
        repr
    }
}

#[async_trait]
impl Encoder for MockEncoder {
    fn dims(&self) -> Dims {
        self.dims
    }

    async fn encode(&self, input: EncoderInput<'_>) -> Result<Representation, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        validate_encoder_input(input)?;
        if let Some(err) = self.failure.lock().unwrap().clone() {
            return Err(err);
        }
        Ok(self.representation_of(input))
    }
}

/// Web search mock serving fixture result lists.
#[derive(Debug, Default)]
pub struct MockWebSearch {
    fixtures: HashMap<String, Vec<WebSearchResult>>,
    default: Vec<WebSearchResult>,
    failure: Mutex<Option<ProviderError>>,
    log: Mutex<Vec<(String, usize)>>,
}

impl MockWebSearch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Results for any query without its own fixture.
    pub fn with_default(mut self, results: Vec<WebSearchResult>) -> Self {
        self.default = results;
        self
    }

    pub fn with_results(mut self, query: impl Into<String>, results: Vec<WebSearchResult>) -> Self {
        self.fixtures.insert(query.into(), results);
        self
    }

    pub fn fail_with(&self, err: Option<ProviderError>) {
        *self.failure.lock().unwrap() = err;
    }

    /// `(query, count)` of every call so far.
    pub fn requests(&self) -> Vec<(String, usize)> {
        self.log.lock().unwrap().clone()
    }

    /// Results ranked 1.. in the given order, each with a PNG thumbnail.
    pub fn ranked(items: &[(&str, &str)]) -> Vec<WebSearchResult> {
        items
            .iter()
            .enumerate()
            .map(|(i, (uri, title))| WebSearchResult {
                image_uri: uri.to_string(),
                thumbnail_bytes: Some(fake_png(uri.as_bytes())),
                title: title.to_string(),
                source_rank: i + 1,
            })
            .collect()
    }
}

#[async_trait]
impl WebSearch for MockWebSearch {
    async fn search(
        &self,
        query: &str,
        count: usize,
    ) -> Result<Vec<WebSearchResult>, ProviderError> {
        validate_search(query, count)?;
        self.log.lock().unwrap().push((query.to_string(), count));
        if let Some(err) = self.failure.lock().unwrap().clone() {
            return Err(err);
        }
        let mut results = self.fixtures.get(query).unwrap_or(&self.default).clone();
        results.sort_by_key(|r| r.source_rank);
        results.truncate(count);
        Ok(results)
    }
}
