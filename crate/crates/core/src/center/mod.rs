//! Request orchestration: query normalization, retrieval in each gallery
//! mode, re-ranking of web results, description lookup for uploaded images
//! and grounded chat turns.

mod prompt;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompt::{
    build_chat_prompt, build_chat_prompt_windowed, compose_user_content, ChatSession,
    DEFAULT_HISTORY_WINDOW, SYSTEM_PROMPT_V1,
};

use crate::providers::{
    ChatMessage, ChatParams, ChatProvider, Encoder, EncoderInput, LanguageDetector,
    ProviderError, WebSearch, DEFAULT_SEARCH_COUNT, ENCODER_TOKEN_LIMIT,
};
use crate::repr::Representation;
use crate::similarity::{rank, Candidates, RankedResult, Scorer, SimilarityError};
use crate::store::{AlbumGallery, GalleryMode, ItemKind, ReprStore, StoreError};

/// Prefix of the translation request; the query follows verbatim.
pub const TRANSLATE_PROMPT: &str =
    "Translate the following text to English, provide the result directly without explanations: ";

/// Prefix of the summarization request; the over-long text follows verbatim.
pub const SUMMARIZE_PROMPT: &str =
    "Summarize the following text in English in fewer than 60 words, provide the result directly without explanations: ";

/// Score given to web results whose thumbnail could not be encoded.
pub const UNSCORED: f32 = -1.0;

#[derive(Debug, Error)]
pub enum CenterError {
    #[error("text is empty")]
    EmptyText,
    #[error("gallery has no items to search")]
    EmptyGallery,
    #[error("description pool is empty")]
    EmptyPool,
    #[error("web search returned no results")]
    NoResults,
    #[error("operation not supported in {0} mode")]
    ModeNotSupported(GalleryMode),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedQuery {
    pub original_text: String,
    pub english_text: String,
    pub detected_lang: String,
    pub was_translated: bool,
    pub was_summarized: bool,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CenterConfig {
    pub chat_params: ChatParams,
    pub history_window: usize,
    pub search_count: usize,
    pub token_limit: usize,
    /// Summarization calls allowed after the first before hard truncation.
    pub summary_retries: usize,
}

impl Default for CenterConfig {
    fn default() -> Self {
        Self {
            chat_params: ChatParams::default(),
            history_window: DEFAULT_HISTORY_WINDOW,
            search_count: DEFAULT_SEARCH_COUNT,
            token_limit: ENCODER_TOKEN_LIMIT,
            summary_retries: 2,
        }
    }
}

/// The provider set a request center talks to.
#[derive(Clone)]
pub struct Providers {
    pub chat: Arc<dyn ChatProvider>,
    pub search: Arc<dyn WebSearch>,
    pub encoder: Arc<dyn Encoder>,
    pub detector: Arc<dyn LanguageDetector>,
}

/// Gallery a retrieval runs against.
#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    Album(&'a AlbumGallery),
    Boon,
    Google,
}

impl Scope<'_> {
    pub fn mode(&self) -> GalleryMode {
        match self {
            Scope::Album(_) => GalleryMode::Album,
            Scope::Boon => GalleryMode::Boon,
            Scope::Google => GalleryMode::Google,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionHit {
    pub description_id: String,
    pub text: String,
    pub image_id: String,
    pub image_uri: Option<String>,
    pub score: f32,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebHit {
    pub image_uri: String,
    pub title: String,
    pub source_rank: usize,
    pub score: f32,
    /// False when the thumbnail was missing or could not be encoded.
    pub scored: bool,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolMatch {
    pub description_id: String,
    pub text: String,
    pub score: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub reply: String,
    pub attached_descriptions: Vec<String>,
}

pub struct RequestCenter {
    providers: Providers,
    scorer: Arc<dyn Scorer>,
    config: CenterConfig,
    boon: Option<Arc<ReprStore>>,
    pool: Option<Arc<ReprStore>>,
}

impl RequestCenter {
    pub fn new(providers: Providers, scorer: Arc<dyn Scorer>, config: CenterConfig) -> Self {
        Self {
            providers,
            scorer,
            config,
            boon: None,
            pool: None,
        }
    }

    /// Shared built-in gallery; also the description pool unless one is set.
    pub fn with_boon(mut self, store: Arc<ReprStore>) -> Self {
        self.boon = Some(store);
        self
    }

    /// Store whose descriptions ground conversations about uploaded images.
    pub fn with_pool(mut self, store: Arc<ReprStore>) -> Self {
        self.pool = Some(store);
        self
    }

    pub fn boon(&self) -> Option<&Arc<ReprStore>> {
        self.boon.as_ref()
    }

    pub fn providers(&self) -> &Providers {
        &self.providers
    }

    pub fn config(&self) -> &CenterConfig {
        &self.config
    }

    async fn ask(&self, prompt: String) -> Result<String, CenterError> {
        let reply = self
            .providers
            .chat
            .chat(&[ChatMessage::user(prompt)], ChatParams::PRECISE)
            .await?;
        let reply = reply.trim();
        if reply.is_empty() {
            return Err(ProviderError::MalformedResponse("empty completion".into()).into());
        }
        Ok(reply.to_string())
    }

    /// Detect, translate when not English, and shorten to the encoder's token limit.
    pub async fn normalize_query(&self, text: &str) -> Result<NormalizedQuery, CenterError> {
        if text.trim().is_empty() {
            return Err(CenterError::EmptyText);
        }
        let detected = self.providers.detector.detect(text)?;
        let was_translated = !detected.is_english();
        let mut english = if was_translated {
            self.ask(format!("{TRANSLATE_PROMPT}{text}")).await?
        } else {
            text.to_string()
        };

        let encoder = &self.providers.encoder;
        let limit = self.config.token_limit;
        let mut was_summarized = false;
        let mut attempts = 0;
        while encoder.count_tokens(&english) > limit && attempts <= self.config.summary_retries {
            english = self.ask(format!("{SUMMARIZE_PROMPT}{english}")).await?;
            was_summarized = true;
            attempts += 1;
        }
        if encoder.count_tokens(&english) > limit {
            english = encoder.truncate_tokens(&english, limit);
        }
        Ok(NormalizedQuery {
            original_text: text.to_string(),
            token_count: encoder.count_tokens(&english),
            english_text: english,
            detected_lang: detected.lang_code,
            was_translated,
            was_summarized,
        })
    }

    fn boon_store(&self) -> Result<&ReprStore, CenterError> {
        self.boon.as_deref().ok_or(CenterError::EmptyGallery)
    }

    fn rank_in(
        &self,
        query: &Representation,
        candidates: &dyn Candidates,
        k: usize,
    ) -> Result<Vec<RankedResult>, CenterError> {
        if candidates.is_empty() {
            return Err(CenterError::EmptyGallery);
        }
        Ok(rank(&query.view(), candidates, k, self.scorer.as_ref())?)
    }

    /// Rank the scope's images against a text query.
    pub async fn text_to_image(
        &self,
        text: &str,
        scope: Scope<'_>,
        k: usize,
    ) -> Result<(NormalizedQuery, Vec<RankedResult>), CenterError> {
        if k == 0 {
            return Err(SimilarityError::InvalidK.into());
        }
        let normalized = self.normalize_query(text).await?;
        let query = self
            .providers
            .encoder
            .encode(EncoderInput::Text(&normalized.english_text))
            .await?;
        let results = match scope {
            Scope::Album(album) => self.rank_in(&query, album.snapshot().as_ref(), k)?,
            Scope::Boon => self.rank_in(&query, &self.boon_store()?.candidates(ItemKind::Image), k)?,
            Scope::Google => return Err(CenterError::ModeNotSupported(GalleryMode::Google)),
        };
        Ok((normalized, results))
    }

    /// Rank descriptions against an image query and attach each one's image.
    pub async fn image_to_text(
        &self,
        image: &[u8],
        scope: Scope<'_>,
        k: usize,
    ) -> Result<Vec<DescriptionHit>, CenterError> {
        crate::providers::sniff_image(image)?;
        let store = match scope {
            Scope::Boon => self.boon_store()?,
            // Albums hold images only.
            Scope::Album(_) => return Err(CenterError::EmptyGallery),
            Scope::Google => return Err(CenterError::ModeNotSupported(GalleryMode::Google)),
        };
        let query = self.providers.encoder.encode(EncoderInput::Image(image)).await?;
        let ranked = self.rank_in(&query, &store.candidates(ItemKind::Description), k)?;
        ranked
            .into_iter()
            .map(|r| {
                let entry = store
                    .description(&r.item_id)
                    .ok_or_else(|| StoreError::UnknownItem(r.item_id.clone()))?;
                let image_id = store.resolve_links(&r.item_id)?.to_string();
                Ok(DescriptionHit {
                    image_uri: store.image(&image_id).and_then(|i| i.uri.clone()),
                    description_id: r.item_id,
                    text: entry.text.clone(),
                    image_id,
                    score: r.score,
                    rank: r.rank,
                })
            })
            .collect()
    }

    /// Fetch web results for the query and re-order them by engine score.
    ///
    /// Results are scored on their thumbnails; a result without an encodable
    /// thumbnail keeps its place in the output at the lowest possible score.
    pub async fn google_mode_search(
        &self,
        text: &str,
    ) -> Result<(NormalizedQuery, Vec<WebHit>), CenterError> {
        let normalized = self.normalize_query(text).await?;
        let fetched = self
            .providers
            .search
            .search(text.trim(), self.config.search_count)
            .await?;
        if fetched.is_empty() {
            return Err(CenterError::NoResults);
        }
        let encoder = &self.providers.encoder;
        let query = encoder
            .encode(EncoderInput::Text(&normalized.english_text))
            .await?;
        let mut hits = Vec::with_capacity(fetched.len());
        for result in fetched {
            let encoded = match result.thumbnail_bytes.as_deref() {
                Some(bytes) => match encoder.encode(EncoderInput::Image(bytes)).await {
                    Ok(repr) => Some(repr),
                    Err(ProviderError::UnsupportedPayload(_)) => None,
                    Err(e) => return Err(e.into()),
                },
                None => None,
            };
            let score = match &encoded {
                Some(repr) => self.scorer.score(&query.view(), &repr.view())?,
                None => UNSCORED,
            };
            if score.is_nan() {
                return Err(SimilarityError::NonFiniteScore(result.image_uri).into());
            }
            hits.push(WebHit {
                image_uri: result.image_uri,
                title: result.title,
                source_rank: result.source_rank,
                score,
                scored: encoded.is_some(),
                rank: 0,
            });
        }
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.source_rank.cmp(&b.source_rank))
        });
        for (i, h) in hits.iter_mut().enumerate() {
            h.rank = i + 1;
        }
        Ok((normalized, hits))
    }

    fn pool_store(&self) -> Option<&ReprStore> {
        self.pool.as_deref().or(self.boon.as_deref())
    }

    /// Best-matching pool description for each image, in input order.
    pub async fn describe_images(&self, images: &[Vec<u8>]) -> Result<Vec<PoolMatch>, CenterError> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        for image in images {
            crate::providers::sniff_image(image)?;
        }
        let pool = match self.pool_store() {
            Some(p) if p.description_count() > 0 => p,
            _ => return Err(CenterError::EmptyPool),
        };
        let candidates = pool.candidates(ItemKind::Description);
        let mut out = Vec::with_capacity(images.len());
        for image in images {
            let repr = self.providers.encoder.encode(EncoderInput::Image(image)).await?;
            let best = rank(&repr.view(), &candidates, 1, self.scorer.as_ref())?
                .into_iter()
                .next()
                .ok_or(CenterError::EmptyPool)?;
            let text = pool
                .description(&best.item_id)
                .map(|d| d.text.clone())
                .unwrap_or_default();
            out.push(PoolMatch {
                description_id: best.item_id,
                text,
                score: best.score,
            });
        }
        Ok(out)
    }

    pub fn build_chat_prompt(
        &self,
        session: &ChatSession,
        user_text: &str,
        new_descriptions: &[String],
    ) -> Vec<ChatMessage> {
        build_chat_prompt_windowed(session, user_text, new_descriptions, self.config.history_window)
    }

    /// Run one conversation turn. The session changes only if the turn succeeds.
    pub async fn chat_turn(
        &self,
        session: &mut ChatSession,
        user_text: &str,
        images: &[Vec<u8>],
    ) -> Result<ChatReply, CenterError> {
        if user_text.trim().is_empty() {
            return Err(CenterError::EmptyText);
        }
        let descriptions: Vec<String> = self
            .describe_images(images)
            .await?
            .into_iter()
            .map(|m| m.text)
            .collect();
        let mut messages = self.build_chat_prompt(session, user_text, &descriptions);
        let reply = self
            .providers
            .chat
            .chat(&messages, self.config.chat_params)
            .await?;
        let user = messages.pop().expect("prompt ends with the user message");
        session.push_exchange(user, reply.clone(), descriptions.clone());
        Ok(ChatReply {
            reply,
            attached_descriptions: descriptions,
        })
    }
}
