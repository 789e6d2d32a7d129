use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::limit::InFlightLimit;
use super::retry::with_retries;
use super::{ChatModel, Completion, EndpointConfig, InferenceError, ModelFactory, Request};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

const BODY_EXCERPT: usize = 512;

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct HttpModel {
    config: EndpointConfig,
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    limit: InFlightLimit,
}

impl HttpModel {
    pub fn new(config: EndpointConfig) -> Result<Self, InferenceError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| InferenceError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| InferenceError::InvalidConfig(e.to_string()))?;
        Ok(HttpModel {
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            limit: InFlightLimit::new(config.max_in_flight),
            config,
            api_key,
            client,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn send_once(&self, prompt: &str) -> Result<Completion, InferenceError> {
        let _permit = self.limit.acquire();
        let body = ChatRequest {
            model: &self.config.model_id,
            messages: [Message {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(transport)?;
        if !(200..300).contains(&status) {
            return Err(InferenceError::Protocol {
                status,
                body: excerpt(&text),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| InferenceError::Protocol {
            status,
            body: format!("unparseable response ({e}): {}", excerpt(&text)),
        })?;
        let choice = parsed.choices.into_iter().next().ok_or(InferenceError::EmptyChoice)?;
        Ok(Completion {
            text: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason.unwrap_or_default(),
            request_index: 0,
        })
    }
}

fn transport(e: reqwest::Error) -> InferenceError {
    InferenceError::Transport {
        message: e.to_string(),
        attempts: 1,
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT).collect()
}

impl ChatModel for HttpModel {
    fn complete(&self, request: &Request) -> Result<Completion, InferenceError> {
        with_retries(
            self.config.max_retries,
            self.config.backoff_base_ms,
            self.config.backoff_max_ms,
            |_| self.send_once(&request.prompt),
        )
    }

    fn max_in_flight(&self) -> usize {
        self.config.max_in_flight
    }

    fn describe(&self) -> String {
        format!("{} @ {}", self.config.model_id, self.config.base_url)
    }
}

/// Builds an [`HttpModel`] for every endpoint.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpFactory;

impl ModelFactory for HttpFactory {
    fn connect(&self, endpoint: &EndpointConfig) -> Result<Arc<dyn ChatModel>, InferenceError> {
        Ok(Arc::new(HttpModel::new(endpoint.clone())?))
    }
}
