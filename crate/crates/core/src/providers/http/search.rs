use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{HttpSettings, Transport};
use crate::providers::{validate_search, ProviderError, WebSearch, WebSearchResult};

/// Results the search API returns per page.
const PAGE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebSearchClientConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    /// Search engine identifier.
    pub engine_id: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    /// Download each result's thumbnail so it can be encoded.
    #[serde(default = "yes")]
    pub fetch_thumbnails: bool,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_endpoint() -> String {
    "https://www.googleapis.com/customsearch/v1".into()
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
struct Page {
    #[serde(default)]
    items: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    link: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    image: Option<ImageInfo>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ImageInfo {
    thumbnail_link: Option<String>,
}

/// Image search over a custom-search style JSON API.
#[derive(Debug)]
pub struct HttpWebSearch {
    config: WebSearchClientConfig,
    transport: Transport,
}

fn is_quota_error(status: u16, body: &str) -> bool {
    status == 429
        || (status == 403
            && ["rateLimitExceeded", "dailyLimitExceeded", "quotaExceeded"]
                .iter()
                .any(|r| body.contains(r)))
}

impl HttpWebSearch {
    pub fn new(config: WebSearchClientConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            transport: Transport::new(config.http.clone())?,
            config,
        })
    }

    async fn page(&self, query: &str, start: usize, num: usize) -> Result<Vec<Item>, ProviderError> {
        let reply = self
            .transport
            .send(|client| {
                let mut params = vec![
                    ("cx", self.config.engine_id.clone()),
                    ("q", query.to_string()),
                    ("searchType", "image".to_string()),
                    ("num", num.to_string()),
                    ("start", start.to_string()),
                ];
                if let Some(key) = &self.config.api_key {
                    params.push(("key", key.clone()));
                }
                client.get(&self.config.endpoint).query(&params)
            })
            .await?;
        if !reply.is_success() {
            let body = reply.text();
            return Err(if is_quota_error(reply.status, &body) {
                ProviderError::QuotaExceeded(body)
            } else {
                reply.rejected()
            });
        }
        let page: Page = serde_json::from_slice(&reply.body)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        Ok(page.items)
    }

    async fn thumbnail(&self, url: &str) -> Option<Vec<u8>> {
        match self.transport.send(|client| client.get(url)).await {
            Ok(reply) if reply.is_success() => Some(reply.body),
            Ok(reply) => {
                tracing::debug!(url, status = reply.status, "thumbnail not fetched");
                None
            }
            Err(err) => {
                tracing::debug!(url, %err, "thumbnail not fetched");
                None
            }
        }
    }
}

#[async_trait]
impl WebSearch for HttpWebSearch {
    async fn search(
        &self,
        query: &str,
        count: usize,
    ) -> Result<Vec<WebSearchResult>, ProviderError> {
        validate_search(query, count)?;
        let mut items = Vec::with_capacity(count);
        while items.len() < count {
            let num = PAGE.min(count - items.len());
            let page = self.page(query, items.len() + 1, num).await?;
            let short = page.len() < num;
            items.extend(page.into_iter().take(num));
            if short {
                break;
            }
        }
        let mut results = Vec::with_capacity(items.len());
        for (i, item) in items.into_iter().enumerate() {
            let thumb_url = item.image.and_then(|im| im.thumbnail_link);
            let thumbnail_bytes = match (&thumb_url, self.config.fetch_thumbnails) {
                (Some(url), true) => self.thumbnail(url).await,
                _ => None,
            };
            results.push(WebSearchResult {
                image_uri: item.link,
                thumbnail_bytes,
                title: item.title,
                source_rank: i + 1,
            });
        }
        Ok(results)
    }
}
