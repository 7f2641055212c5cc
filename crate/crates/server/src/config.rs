//! Service configuration: one TOML file plus environment overrides for secrets.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use crossmodal_core::center::CenterConfig;
use crossmodal_core::providers::http::{ChatClientConfig, EncoderClientConfig, WebSearchClientConfig};
use crossmodal_core::{Dims, ScorerConfig, DEFAULT_ALBUM_CAPACITY};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_LLM_API_KEY: &str = "CROSSMODAL_LLM_API_KEY";
pub const ENV_WEB_SEARCH_API_KEY: &str = "CROSSMODAL_WEB_SEARCH_API_KEY";
pub const ENV_ENCODER_ENDPOINT: &str = "CROSSMODAL_ENCODER_ENDPOINT";

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 10 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Deterministic in-process stand-ins; no network access.
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub kind: ProviderKind,
    pub mock_seed: u64,
    pub chat: Option<ChatClientConfig>,
    pub search: Option<WebSearchClientConfig>,
    pub encoder: Option<EncoderClientConfig>,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            mock_seed: 7,
            chat: None,
            search: None,
            encoder: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    /// Accounts database, albums and uploaded payloads live here.
    pub data_dir: PathBuf,
    /// Manifest of the shared corpus.
    pub boon_store: Option<PathBuf>,
    /// Manifest whose descriptions ground chat; defaults to the shared corpus.
    pub pool_store: Option<PathBuf>,
    /// Built front-end assets, served at `/`.
    pub static_dir: Option<PathBuf>,
    /// Representation dims when no shared corpus is configured.
    pub dims: Dims,
    pub max_upload_bytes: usize,
    pub max_request_images: usize,
    pub album_capacity: usize,
    pub default_k: usize,
    pub max_k: usize,
    pub page_size: usize,
    pub max_page_size: usize,
    pub scorer: ScorerConfig,
    pub center: CenterConfig,
    pub providers: ProviderSettings,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            boon_store: None,
            pool_store: None,
            static_dir: None,
            dims: Dims::default(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            max_request_images: 20,
            album_capacity: DEFAULT_ALBUM_CAPACITY,
            default_k: 10,
            max_k: 1000,
            page_size: 50,
            max_page_size: 500,
            scorer: ScorerConfig::default(),
            center: CenterConfig::default(),
            providers: ProviderSettings::default(),
        }
    }
}

impl ServerConfig {
    /// Parse a config file, resolve relative paths against its directory and
    /// apply environment overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Invalid(message) => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        for p in [&mut self.boon_store, &mut self.pool_store, &mut self.static_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    /// Secrets and the encoder location come from the environment when set.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        let p = &mut self.providers;
        if let Some(key) = var(ENV_LLM_API_KEY) {
            if let Some(chat) = p.chat.as_mut() {
                chat.api_key = Some(key);
            }
        }
        if let Some(key) = var(ENV_WEB_SEARCH_API_KEY) {
            if let Some(search) = p.search.as_mut() {
                search.api_key = Some(key);
            }
        }
        if let Some(endpoint) = var(ENV_ENCODER_ENDPOINT) {
            match p.encoder.as_mut() {
                Some(enc) => enc.endpoint = endpoint,
                None => {
                    p.encoder = Some(EncoderClientConfig {
                        endpoint,
                        dims: self.dims,
                        http: Default::default(),
                    })
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.max_upload_bytes == 0 {
            return bad("max_upload_bytes must be positive");
        }
        if self.max_request_images == 0 {
            return bad("max_request_images must be positive");
        }
        if self.default_k == 0 || self.default_k > self.max_k {
            return bad("default_k must be in 1..=max_k");
        }
        if self.page_size == 0 || self.page_size > self.max_page_size {
            return bad("page_size must be in 1..=max_page_size");
        }
        if self.providers.kind == ProviderKind::Http {
            let p = &self.providers;
            if p.chat.is_none() || p.search.is_none() || p.encoder.is_none() {
                return bad("http providers need [providers.chat], [providers.search] and [providers.encoder]");
            }
        }
        Ok(())
    }

    /// Largest request body accepted on any route.
    pub fn body_limit(&self) -> usize {
        // base64 inflates by 4/3; leave room for form framing and JSON fields
        self.max_upload_bytes
            .saturating_mul(self.max_request_images)
            .saturating_mul(4)
            / 3
            + 64 * 1024
    }
}
