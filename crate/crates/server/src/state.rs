//! Shared service state: the request center, metadata and per-account albums.

use std::path::PathBuf;
use std::sync::Arc;

use crossmodal_core::center::{
    CenterConfig, Providers, RequestCenter, SUMMARIZE_PROMPT, TRANSLATE_PROMPT,
};
use crossmodal_core::providers::http::{HttpChat, HttpEncoder, HttpWebSearch};
use crossmodal_core::providers::mock::{MockChat, MockEncoder, MockWebSearch};
use crossmodal_core::providers::{NgramDetector, ProviderError, Role};
use crossmodal_core::{AlbumGallery, Dims, ReprStore, StoreError};
use dashmap::DashMap;
use serde::Serialize;
use thiserror::Error;
use tokio::sync::Mutex;

use crate::config::{ConfigError, ProviderKind, ServerConfig};
use crate::error::{ApiError, ApiResult};
use crate::meta::{Account, MetaError, MetaStore};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot open store: {0}")]
    Store(#[from] StoreError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("cannot build provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("invalid scorer: {0}")]
    Scorer(#[from] crossmodal_core::SimilarityError),
    #[error("cannot create {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A corpus image and the descriptions linked to it, for gallery listings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListedImage {
    pub item_id: String,
    pub uri: Option<String>,
    pub descriptions: Vec<ListedDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListedDescription {
    pub description_id: String,
    pub text: String,
}

pub struct AppState {
    pub config: ServerConfig,
    pub center: RequestCenter,
    pub meta: MetaStore,
    pub dims: Dims,
    albums: DashMap<String, Arc<AlbumGallery>>,
    session_locks: DashMap<String, Arc<Mutex<()>>>,
    boon_listing: Vec<ListedImage>,
}

/// Public URI of a corpus payload. Relative manifest URIs are served from
/// the corpus directory.
pub fn boon_uri(raw: Option<&str>) -> Option<String> {
    raw.map(|u| {
        if u.contains("://") || u.starts_with('/') {
            u.to_string()
        } else {
            format!("/media/boon/{}", u.trim_start_matches("./"))
        }
    })
}

/// Offline stand-ins: translation passes text through, summaries keep the
/// first 40 words, and chat acknowledges what it was shown.
pub fn mock_providers(dims: Dims, seed: u64) -> Providers {
    let chat = MockChat::with_responder(|messages| {
        let last = &messages.last().expect("validated non-empty").content;
        if let Some(text) = last.strip_prefix(TRANSLATE_PROMPT) {
            return Ok(text.to_string());
        }
        if let Some(text) = last.strip_prefix(SUMMARIZE_PROMPT) {
            return Ok(text.split_whitespace().take(40).collect::<Vec<_>>().join(" "));
        }
        let images = messages
            .iter()
            .filter(|m| m.role == Role::User)
            .flat_map(|m| m.content.lines())
            .filter(|l| l.starts_with("Image "))
            .count();
        Ok(format!("(offline reply) {images} picture(s) in this conversation so far."))
    });
    let results: Vec<(String, String)> = (1..=10)
        .map(|i| (format!("https://example.com/web/{i}.jpg"), format!("web result {i}")))
        .collect();
    let pairs: Vec<(&str, &str)> = results.iter().map(|(u, t)| (u.as_str(), t.as_str())).collect();
    Providers {
        chat: Arc::new(chat),
        search: Arc::new(MockWebSearch::new().with_default(MockWebSearch::ranked(&pairs))),
        encoder: Arc::new(MockEncoder::new(dims, seed)),
        detector: Arc::new(NgramDetector::new()),
    }
}

fn http_providers(config: &ServerConfig) -> Result<Providers, StartupError> {
    let p = &config.providers;
    let missing = |what: &str| ConfigError::Invalid(format!("missing [providers.{what}]"));
    Ok(Providers {
        chat: Arc::new(HttpChat::new(p.chat.clone().ok_or_else(|| missing("chat"))?)?),
        search: Arc::new(HttpWebSearch::new(
            p.search.clone().ok_or_else(|| missing("search"))?,
        )?),
        encoder: Arc::new(HttpEncoder::new(
            p.encoder.clone().ok_or_else(|| missing("encoder"))?,
        )?),
        detector: Arc::new(NgramDetector::new()),
    })
}

impl AppState {
    /// Build state with providers chosen by the configuration.
    pub fn from_config(config: ServerConfig) -> Result<Arc<Self>, StartupError> {
        config.validate()?;
        let boon = Self::open_store(&config.boon_store)?;
        let dims = boon.as_ref().map_or(config.dims, |s| s.dims());
        let providers = match config.providers.kind {
            ProviderKind::Mock => mock_providers(dims, config.providers.mock_seed),
            ProviderKind::Http => http_providers(&config)?,
        };
        Self::assemble(config, providers, boon)
    }

    /// Build state around caller-supplied providers.
    pub fn with_providers(
        config: ServerConfig,
        providers: Providers,
    ) -> Result<Arc<Self>, StartupError> {
        config.validate()?;
        let boon = Self::open_store(&config.boon_store)?;
        Self::assemble(config, providers, boon)
    }

    fn open_store(path: &Option<PathBuf>) -> Result<Option<Arc<ReprStore>>, StartupError> {
        Ok(match path {
            Some(p) => Some(Arc::new(ReprStore::open(p)?)),
            None => None,
        })
    }

    fn assemble(
        config: ServerConfig,
        providers: Providers,
        boon: Option<Arc<ReprStore>>,
    ) -> Result<Arc<Self>, StartupError> {
        let dims = boon.as_ref().map_or(config.dims, |s| s.dims());
        std::fs::create_dir_all(&config.data_dir).map_err(|source| StartupError::Io {
            path: config.data_dir.clone(),
            source,
        })?;
        let meta = MetaStore::open(&config.data_dir.join("meta.redb"))?;
        let scorer = config.scorer.build()?;
        let center_config: CenterConfig = config.center.clone();
        let mut center = RequestCenter::new(providers, scorer, center_config);
        let mut boon_listing = Vec::new();
        if let Some(store) = &boon {
            boon_listing = Self::listing(store);
            center = center.with_boon(store.clone());
        }
        if let Some(pool) = Self::open_store(&config.pool_store)? {
            center = center.with_pool(pool);
        }
        Ok(Arc::new(Self {
            config,
            center,
            meta,
            dims,
            albums: DashMap::new(),
            session_locks: DashMap::new(),
            boon_listing,
        }))
    }

    fn listing(store: &ReprStore) -> Vec<ListedImage> {
        let manifest = store.manifest();
        let mut by_image: std::collections::HashMap<&str, Vec<ListedDescription>> =
            std::collections::HashMap::new();
        for d in &manifest.descriptions {
            by_image.entry(d.image.as_str()).or_default().push(ListedDescription {
                description_id: d.id.clone(),
                text: d.text.clone(),
            });
        }
        let mut out: Vec<ListedImage> = manifest
            .images
            .iter()
            .map(|i| ListedImage {
                item_id: i.id.clone(),
                uri: boon_uri(i.uri.as_deref()),
                descriptions: by_image.remove(i.id.as_str()).unwrap_or_default(),
            })
            .collect();
        out.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        out
    }

    pub fn boon(&self) -> Option<&Arc<ReprStore>> {
        self.center.boon()
    }

    /// Corpus images sorted by item id.
    pub fn boon_listing(&self) -> &[ListedImage] {
        &self.boon_listing
    }

    pub fn album_dir(&self, account: &Account) -> PathBuf {
        self.config.data_dir.join("albums").join(&account.account_id)
    }

    pub fn payload_dir(&self, account: &Account) -> PathBuf {
        self.album_dir(account).join("payloads")
    }

    /// The account's album, created on first use.
    pub fn album(&self, account: &Account) -> ApiResult<Arc<AlbumGallery>> {
        if let Some(a) = self.albums.get(&account.account_id) {
            return Ok(a.clone());
        }
        let entry = self.albums.entry(account.account_id.clone());
        let album = match entry {
            dashmap::Entry::Occupied(o) => o.get().clone(),
            dashmap::Entry::Vacant(v) => {
                let album = AlbumGallery::open_or_create(
                    self.album_dir(account),
                    self.dims,
                    self.config.album_capacity,
                    Some(account.account_id.clone()),
                )
                .map_err(ApiError::from)?;
                v.insert(Arc::new(album)).clone()
            }
        };
        Ok(album)
    }

    /// Lock serializing turns within one chat session.
    pub fn session_lock(&self, session_id: &str) -> Arc<Mutex<()>> {
        self.session_locks
            .entry(session_id.to_string())
            .or_default()
            .clone()
    }
}
