//! Rater backed by an OpenAI-compatible chat-completions endpoint.

use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use suber_core::rater::{parse_rating, DescriptionRequest, SyntheticRater};
use suber_core::{Rater, RaterError, RaterKind, RatingOutcome, RatingRequest};

pub const API_KEY_VAR: &str = "SUBER_API_KEY";

#[derive(Debug, Clone)]
pub struct LlmRater {
    agent: ureq::Agent,
    url: String,
    model: String,
    max_tokens: u32,
    temperature: f64,
    max_attempts: u32,
    assistant_prefill: bool,
    api_key: Option<String>,
    /// Delay before the second attempt; doubles for each later one.
    pub backoff: Duration,
}

impl LlmRater {
    /// Returns `None` for non-HTTP rater kinds. The API key is read from
    /// `SUBER_API_KEY` if set.
    pub fn from_kind(kind: &RaterKind) -> Option<Self> {
        let RaterKind::LlmHttp {
            endpoint,
            model,
            max_tokens,
            temperature,
            max_attempts,
            assistant_prefill,
        } = kind
        else {
            return None;
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        Some(LlmRater {
            agent,
            url: format!("{}/v1/chat/completions", endpoint.trim_end_matches('/')),
            model: model.clone(),
            max_tokens: *max_tokens,
            temperature: *temperature,
            max_attempts: *max_attempts,
            assistant_prefill: *assistant_prefill,
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            backoff: Duration::from_millis(500),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn complete(&self, messages: Vec<Value>) -> Result<String, RaterError> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        });
        let mut last = RaterError::Transport("no attempt made".into());
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut request = self.agent.post(&self.url);
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
            let mut response = match request.send_json(&body) {
                Ok(r) => r,
                Err(e) => {
                    last = RaterError::Transport(e.to_string());
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = match response.body_mut().read_to_string() {
                Ok(t) => t,
                Err(e) => {
                    last = RaterError::Transport(e.to_string());
                    continue;
                }
            };
            if status == 429 || status >= 500 {
                last = RaterError::Http { status, body: text };
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(RaterError::Http { status, body: text });
            }
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| RaterError::Transport(format!("response is not JSON: {e}")))?;
            return value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| {
                    RaterError::Transport("response lacks choices[0].message.content".into())
                });
        }
        Err(last)
    }
}

fn message(role: &str, content: &str) -> Value {
    json!({ "role": role, "content": content })
}

impl Rater for LlmRater {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError> {
        let prompt = request.prompt;
        let mut messages = Vec::with_capacity(prompt.shots.len() * 2 + 3);
        if !prompt.system.is_empty() {
            messages.push(message("system", &prompt.system));
        }
        for shot in &prompt.shots {
            messages.push(message("user", &shot.question));
            messages.push(message("assistant", &shot.answer));
        }
        if self.assistant_prefill {
            messages.push(message("user", &prompt.query));
            messages.push(message("assistant", &prompt.answer_prefix));
        } else {
            messages.push(message(
                "user",
                &format!("{}\n\n{}", prompt.query, prompt.answer_prefix),
            ));
        }
        let raw_text = self.complete(messages)?;
        let rating = parse_rating(&raw_text, request.encoding)?;
        Ok(RatingOutcome { raw_text, rating })
    }

    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError> {
        let text = self.complete(vec![message("user", request.prompt)])?;
        let text = text.trim();
        let lead = format!("{} is ", request.seed.gender.pronoun());
        if text.is_empty() {
            return Err(RaterError::NoParse { raw: text.into() });
        }
        if text.to_ascii_lowercase().starts_with(&lead) {
            Ok(text.to_string())
        } else {
            Ok(format!("{lead}{text}"))
        }
    }
}

/// The rater selected by a config.
#[derive(Debug, Clone)]
pub enum AnyRater {
    Synthetic(SyntheticRater),
    Llm(LlmRater),
}

impl AnyRater {
    pub fn from_kind(kind: &RaterKind) -> Self {
        match LlmRater::from_kind(kind) {
            Some(llm) => AnyRater::Llm(llm),
            None => AnyRater::Synthetic(SyntheticRater),
        }
    }
}

impl Rater for AnyRater {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError> {
        match self {
            AnyRater::Synthetic(r) => r.rate(request),
            AnyRater::Llm(r) => r.rate(request),
        }
    }

    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError> {
        match self {
            AnyRater::Synthetic(r) => r.describe(request),
            AnyRater::Llm(r) => r.describe(request),
        }
    }
}
