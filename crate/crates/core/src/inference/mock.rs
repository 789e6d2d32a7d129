use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::limit::InFlightLimit;
use super::retry::with_retries;
use super::{ChatModel, Completion, InferenceError, Request};

/// What the mock does for one request attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockReply {
    Text(String),
    /// Fail with this HTTP status.
    Status(u16),
    /// Fail as if the connection dropped.
    Transport,
    /// Succeed with an empty `choices` array.
    Empty,
}

impl From<&str> for MockReply {
    fn from(s: &str) -> Self {
        MockReply::Text(s.to_string())
    }
}

impl From<String> for MockReply {
    fn from(s: String) -> Self {
        MockReply::Text(s)
    }
}

type ReplyFn = dyn Fn(&Request, u32) -> MockReply + Send + Sync;

pub enum MockResponse {
    Fixed(MockReply),
    /// Replies in order; the last one repeats once the script runs out.
    Sequence(Vec<MockReply>, Mutex<usize>),
    /// Computed from the request and the zero-based attempt number.
    Func(Arc<ReplyFn>),
}

impl MockResponse {
    pub fn sequence(replies: impl IntoIterator<Item = MockReply>) -> Self {
        MockResponse::Sequence(replies.into_iter().collect(), Mutex::new(0))
    }

    pub fn func(f: impl Fn(&Request, u32) -> MockReply + Send + Sync + 'static) -> Self {
        MockResponse::Func(Arc::new(f))
    }

    fn next(&self, request: &Request, attempt: u32) -> MockReply {
        match self {
            MockResponse::Fixed(r) => r.clone(),
            MockResponse::Sequence(replies, cursor) => {
                let mut cursor = cursor.lock().unwrap();
                let Some(last) = replies.len().checked_sub(1) else {
                    return MockReply::Empty;
                };
                let reply = replies[(*cursor).min(last)].clone();
                *cursor += 1;
                reply
            }
            MockResponse::Func(f) => f(request, attempt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Matcher {
    InstanceId(String),
    Contains(String),
    Default,
}

struct Rule {
    matcher: Matcher,
    response: MockResponse,
}

/// One recorded attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub prompt: String,
    pub instance_id: Option<String>,
    pub attempt: u32,
    pub reply: MockReply,
}

/// Deterministic stand-in for a served model.
///
/// Rules are consulted by precedence: instance-id matches, then substring
/// matches in insertion order, then the default rule.
pub struct MockModel {
    name: String,
    rules: Vec<Rule>,
    max_retries: u32,
    limit: InFlightLimit,
    latency: Option<Arc<dyn Fn(&Request) -> Duration + Send + Sync>>,
    log: Mutex<Vec<Invocation>>,
}

#[derive(Default)]
pub struct MockModelBuilder {
    name: Option<String>,
    rules: Vec<Rule>,
    max_retries: u32,
    max_in_flight: Option<usize>,
    latency: Option<Arc<dyn Fn(&Request) -> Duration + Send + Sync>>,
}

impl MockModelBuilder {
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn rule(mut self, matcher: Matcher, response: MockResponse) -> Self {
        self.rules.push(Rule { matcher, response });
        self
    }

    pub fn on_default(self, reply: impl Into<MockReply>) -> Self {
        self.rule(Matcher::Default, MockResponse::Fixed(reply.into()))
    }

    pub fn on_contains(self, needle: impl Into<String>, reply: impl Into<MockReply>) -> Self {
        self.rule(Matcher::Contains(needle.into()), MockResponse::Fixed(reply.into()))
    }

    pub fn on_instance(self, id: impl Into<String>, reply: impl Into<MockReply>) -> Self {
        self.rule(Matcher::InstanceId(id.into()), MockResponse::Fixed(reply.into()))
    }

    pub fn max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    pub fn max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = Some(n);
        self
    }

    pub fn latency(mut self, f: impl Fn(&Request) -> Duration + Send + Sync + 'static) -> Self {
        self.latency = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> MockModel {
        MockModel {
            name: self.name.unwrap_or_else(|| "mock".into()),
            rules: self.rules,
            max_retries: self.max_retries,
            limit: InFlightLimit::new(self.max_in_flight.unwrap_or(4)),
            latency: self.latency,
            log: Mutex::new(Vec::new()),
        }
    }
}

impl MockModel {
    pub fn builder() -> MockModelBuilder {
        MockModelBuilder::default()
    }

    /// Mock whose every reply comes from `f(request, attempt)`.
    pub fn from_fn(f: impl Fn(&Request, u32) -> MockReply + Send + Sync + 'static) -> MockModelBuilder {
        Self::builder().rule(Matcher::Default, MockResponse::func(f))
    }

    pub fn invocations(&self) -> Vec<Invocation> {
        self.log.lock().unwrap().clone()
    }

    pub fn invocation_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    pub fn peak_in_flight(&self) -> usize {
        self.limit.peak()
    }

    fn find_rule(&self, request: &Request) -> Option<&Rule> {
        let id = request.context.instance_id();
        let by_id = self
            .rules
            .iter()
            .find(|r| matches!(&r.matcher, Matcher::InstanceId(want) if Some(want.as_str()) == id));
        by_id
            .or_else(|| {
                self.rules
                    .iter()
                    .find(|r| matches!(&r.matcher, Matcher::Contains(needle) if request.prompt.contains(needle.as_str())))
            })
            .or_else(|| self.rules.iter().find(|r| r.matcher == Matcher::Default))
    }

    fn attempt(&self, request: &Request, attempt: u32) -> Result<Completion, InferenceError> {
        let _permit = self.limit.acquire();
        if let Some(latency) = &self.latency {
            std::thread::sleep(latency(request));
        }
        let Some(rule) = self.find_rule(request) else {
            let excerpt: String = request.prompt.chars().take(80).collect();
            return Err(InferenceError::NoRuleMatches(excerpt));
        };
        let reply = rule.response.next(request, attempt);
        self.log.lock().unwrap().push(Invocation {
            prompt: request.prompt.clone(),
            instance_id: request.context.instance_id().map(str::to_string),
            attempt,
            reply: reply.clone(),
        });
        match reply {
            MockReply::Text(text) => Ok(Completion {
                text,
                finish_reason: "stop".into(),
                request_index: 0,
            }),
            MockReply::Status(status) => Err(InferenceError::Protocol {
                status,
                body: "mock failure".into(),
            }),
            MockReply::Transport => Err(InferenceError::Transport {
                message: "mock connection failure".into(),
                attempts: attempt + 1,
            }),
            MockReply::Empty => Err(InferenceError::EmptyChoice),
        }
    }
}

impl ChatModel for MockModel {
    fn complete(&self, request: &Request) -> Result<Completion, InferenceError> {
        with_retries(self.max_retries, 0, 0, |attempt| self.attempt(request, attempt))
    }

    fn max_in_flight(&self) -> usize {
        self.limit.max()
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}
