use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{join_url, HttpSettings, Transport};
use crate::providers::{
    sniff_image, validate_encoder_input, Encoder, EncoderInput, ProviderError,
};
use crate::repr::{Dims, Representation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderClientConfig {
    /// Base URL; text goes to `<endpoint>/encode/text`, images to `<endpoint>/encode/image`.
    pub endpoint: String,
    #[serde(default)]
    pub dims: Dims,
    #[serde(default)]
    pub http: HttpSettings,
}

#[derive(Deserialize)]
struct Encoded {
    global: Vec<f32>,
    locals: Vec<Vec<f32>>,
}

/// Client for an out-of-process encoder.
#[derive(Debug)]
pub struct HttpEncoder {
    text_url: String,
    image_url: String,
    dims: Dims,
    transport: Transport,
}

impl HttpEncoder {
    pub fn new(config: EncoderClientConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            text_url: join_url(&config.endpoint, "encode/text"),
            image_url: join_url(&config.endpoint, "encode/image"),
            dims: config.dims,
            transport: Transport::new(config.http)?,
        })
    }

    fn decode(&self, body: &[u8]) -> Result<Representation, ProviderError> {
        let malformed = |m: String| ProviderError::MalformedResponse(m);
        let enc: Encoded = serde_json::from_slice(body).map_err(|e| malformed(e.to_string()))?;
        let d = self.dims;
        if enc.global.len() != d.global {
            return Err(malformed(format!(
                "global has {} components, expected {}",
                enc.global.len(),
                d.global
            )));
        }
        if enc.locals.len() != d.locals_per_item || enc.locals.iter().any(|r| r.len() != d.local)
        {
            return Err(malformed(format!(
                "locals must be {} rows of {}",
                d.locals_per_item, d.local
            )));
        }
        let locals = enc.locals.into_iter().flatten().collect();
        let repr = Representation::new(enc.global, locals, d.local);
        if !repr.is_finite() {
            return Err(malformed("non-finite component".into()));
        }
        Ok(repr)
    }
}

#[async_trait]
impl Encoder for HttpEncoder {
    fn dims(&self) -> Dims {
        self.dims
    }

    async fn encode(&self, input: EncoderInput<'_>) -> Result<Representation, ProviderError> {
        validate_encoder_input(input)?;
        let reply = match input {
            EncoderInput::Text(text) => {
                let body = serde_json::json!({ "text": text }).to_string();
                self.transport
                    .send(|c| {
                        c.post(&self.text_url)
                            .header("content-type", "application/json")
                            .body(body.clone())
                    })
                    .await?
            }
            EncoderInput::Image(bytes) => {
                let format = sniff_image(bytes)?;
                self.transport
                    .send(|c| {
                        c.post(&self.image_url)
                            .header("content-type", format.content_type())
                            .body(bytes.to_vec())
                    })
                    .await?
            }
        };
        match reply.status {
            200..=299 => self.decode(&reply.body),
            400 | 413 | 415 | 422 => Err(ProviderError::UnsupportedPayload(reply.text())),
            _ => Err(reply.rejected()),
        }
    }
}
