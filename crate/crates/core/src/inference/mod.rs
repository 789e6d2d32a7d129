//! Chat-completion clients: an OpenAI-compatible HTTP endpoint and an
//! in-process deterministic mock, both behind [`ChatModel`].

mod batch;
mod http;
mod limit;
mod mock;
mod retry;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::augment::AugMethod;
use crate::data::Instance;

pub use batch::complete_many;
pub use http::{HttpFactory, HttpModel};
pub use limit::InFlightLimit;
pub use mock::{Invocation, Matcher, MockModel, MockModelBuilder, MockReply, MockResponse};
pub use retry::{backoff_delay, is_retryable_status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Teacher,
    Student,
}

/// Connection and decoding settings for one served model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_id: String,
    /// Environment variable holding a bearer token.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub role: Role,
    /// First retry delay; doubles per attempt.
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig::student("http://localhost:8000/v1", "student")
    }
}

impl EndpointConfig {
    /// Student defaults: greedy decoding and short answers.
    pub fn student(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model_id: model_id.into(),
            api_key_env: None,
            temperature: 0.0,
            max_tokens: 16,
            timeout_ms: 60_000,
            max_retries: 3,
            max_in_flight: 8,
            role: Role::Student,
            backoff_base_ms: 500,
            backoff_max_ms: 16_000,
        }
    }

    /// Teacher defaults: sampled decoding with room for a full sentence.
    pub fn teacher(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            temperature: 0.7,
            max_tokens: 256,
            role: Role::Teacher,
            ..EndpointConfig::student(base_url, model_id)
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |msg: &str| Err(InferenceError::InvalidConfig(msg.to_string()));
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be finite and non-negative");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: String,
    pub request_index: usize,
}

/// Side information attached to a request. Never sent over the wire; it lets
/// mocks key their behaviour on the instance being asked about.
#[derive(Debug, Clone, Default)]
pub enum RequestContext {
    #[default]
    None,
    Evaluate {
        instance: Instance,
    },
    Generate {
        seed: Instance,
        method: AugMethod,
        attempt: u32,
    },
}

impl RequestContext {
    pub fn instance_id(&self) -> Option<&str> {
        match self {
            RequestContext::None => None,
            RequestContext::Evaluate { instance } => Some(&instance.id),
            RequestContext::Generate { seed, .. } => Some(&seed.id),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Request {
    pub prompt: String,
    pub context: RequestContext,
}

impl Request {
    pub fn new(prompt: impl Into<String>) -> Self {
        Request {
            prompt: prompt.into(),
            context: RequestContext::None,
        }
    }

    pub fn with_context(prompt: impl Into<String>, context: RequestContext) -> Self {
        Request {
            prompt: prompt.into(),
            context,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Protocol { status: u16, body: String },
    #[error("response contained no choices")]
    EmptyChoice,
    #[error("no mock rule matches prompt {0:?}")]
    NoRuleMatches(String),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("no model registered for {0}")]
    UnknownEndpoint(String),
}

impl InferenceError {
    pub fn is_retryable(&self) -> bool {
        match self {
            InferenceError::Transport { .. } => true,
            InferenceError::Protocol { status, .. } => is_retryable_status(*status),
            _ => false,
        }
    }
}

/// Anything that answers a single-message chat request.
pub trait ChatModel: Send + Sync {
    /// One request, retried internally on transient failures.
    fn complete(&self, request: &Request) -> Result<Completion, InferenceError>;

    /// Upper bound on concurrent requests to this model.
    fn max_in_flight(&self) -> usize {
        1
    }

    fn describe(&self) -> String;

    fn complete_prompt(&self, prompt: &str) -> Result<Completion, InferenceError> {
        self.complete(&Request::new(prompt))
    }
}

impl<T: ChatModel + ?Sized> ChatModel for Arc<T> {
    fn complete(&self, request: &Request) -> Result<Completion, InferenceError> {
        (**self).complete(request)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Resolves endpoint configurations (teacher, base student, checkpoints) to models.
pub trait ModelFactory: Send + Sync {
    fn connect(&self, endpoint: &EndpointConfig) -> Result<Arc<dyn ChatModel>, InferenceError>;
}

/// Dispatches to registered models by exact `base_url` or URL prefix, with an
/// optional fallback factory.
#[derive(Default, Clone)]
pub struct ModelRouter {
    exact: HashMap<String, Arc<dyn ChatModel>>,
    prefixes: Vec<(String, Arc<dyn ModelFactory>)>,
    fallback: Option<Arc<dyn ModelFactory>>,
}

impl ModelRouter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(mut self, base_url: impl Into<String>, model: Arc<dyn ChatModel>) -> Self {
        self.exact.insert(base_url.into(), model);
        self
    }

    pub fn route_prefix(mut self, prefix: impl Into<String>, factory: Arc<dyn ModelFactory>) -> Self {
        self.prefixes.push((prefix.into(), factory));
        self
    }

    pub fn fallback(mut self, factory: Arc<dyn ModelFactory>) -> Self {
        self.fallback = Some(factory);
        self
    }
}

impl ModelFactory for ModelRouter {
    fn connect(&self, endpoint: &EndpointConfig) -> Result<Arc<dyn ChatModel>, InferenceError> {
        if let Some(model) = self.exact.get(&endpoint.base_url) {
            return Ok(model.clone());
        }
        if let Some((_, factory)) = self
            .prefixes
            .iter()
            .find(|(prefix, _)| endpoint.base_url.starts_with(prefix.as_str()))
        {
            return factory.connect(endpoint);
        }
        match &self.fallback {
            Some(factory) => factory.connect(endpoint),
            None => Err(InferenceError::UnknownEndpoint(endpoint.base_url.clone())),
        }
    }
}
