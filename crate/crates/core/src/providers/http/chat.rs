use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{join_url, HttpSettings, Transport};
use crate::providers::{validate_messages, ChatMessage, ChatParams, ChatProvider, ProviderError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatClientConfig {
    /// Base URL; requests go to `<endpoint>/chat/completions`.
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_model() -> String {
    "gpt-3.5-turbo".into()
}

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
}

/// Serialized chat-completions request body.
pub fn chat_request_body(model: &str, messages: &[ChatMessage], params: ChatParams) -> String {
    serde_json::to_string(&RequestBody {
        model,
        messages,
        temperature: params.temperature,
    })
    .expect("request body serializes")
}

#[derive(Deserialize)]
struct ResponseBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

/// Chat-completions client.
#[derive(Debug)]
pub struct HttpChat {
    url: String,
    model: String,
    api_key: Option<String>,
    transport: Transport,
}

impl HttpChat {
    pub fn new(config: ChatClientConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            url: join_url(&config.endpoint, "chat/completions"),
            model: config.model,
            api_key: config.api_key,
            transport: Transport::new(config.http)?,
        })
    }
}

#[async_trait]
impl ChatProvider for HttpChat {
    async fn chat(
        &self,
        messages: &[ChatMessage],
        params: ChatParams,
    ) -> Result<String, ProviderError> {
        validate_messages(messages)?;
        let body = chat_request_body(&self.model, messages, params);
        let reply = self
            .transport
            .send(|client| {
                let req = client
                    .post(&self.url)
                    .header("content-type", "application/json")
                    .body(body.clone());
                match &self.api_key {
                    Some(key) => req.bearer_auth(key),
                    None => req,
                }
            })
            .await?;
        if !reply.is_success() {
            return Err(reply.rejected());
        }
        let parsed: ResponseBody = serde_json::from_slice(&reply.body)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::MalformedResponse("no message content".into()))
    }
}
