use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::backend::{BackendError, CompletionBackend, QueryKey};
use super::ChatMessage;

/// OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    /// Left unset, the provider default applies.
    pub temperature: Option<f64>,
    /// Extra request fields passed through untouched.
    pub extra: Map<String, Value>,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Global request cap shared by all workers.
    pub requests_per_minute: Option<u32>,
    pub timeout_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: None,
            extra: Map::new(),
            max_retries: 5,
            backoff_base_ms: 1000,
            backoff_max_ms: 60_000,
            requests_per_minute: None,
            timeout_ms: 300_000,
        }
    }
}

pub struct HttpBackend {
    cfg: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    next_slot: Mutex<Instant>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(BackendError),
}

fn is_context_overflow(body: &str) -> bool {
    let b = body.to_ascii_lowercase();
    b.contains("context_length_exceeded") || b.contains("maximum context length") || b.contains("context length")
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| BackendError::BackendUnavailable(e.to_string()))?;
        Ok(HttpBackend {
            cfg,
            api_key,
            client,
            next_slot: Mutex::new(Instant::now()),
        })
    }

    fn wait_for_slot(&self) {
        let Some(rpm) = self.cfg.requests_per_minute.filter(|&r| r > 0) else {
            return;
        };
        let interval = Duration::from_secs(60) / rpm;
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + interval;
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    fn body(&self, messages: &[ChatMessage]) -> Value {
        let msgs: Vec<Value> = messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        let mut body = self.cfg.extra.clone();
        body.insert("model".into(), json!(self.cfg.model));
        body.insert("messages".into(), Value::Array(msgs));
        if let Some(t) = self.cfg.temperature {
            body.insert("temperature".into(), json!(t));
        }
        Value::Object(body)
    }

    fn attempt(&self, body: &Value) -> Attempt {
        self.wait_for_slot();
        let mut req = self.client.post(&self.cfg.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_success() {
            let parsed: Result<Value, _> = serde_json::from_str(&text);
            return match parsed
                .ok()
                .as_ref()
                .and_then(|v| v.pointer("/choices/0/message/content"))
                .and_then(Value::as_str)
            {
                Some(content) => Attempt::Done(content.to_string()),
                None => Attempt::Fail(BackendError::BackendUnavailable(format!(
                    "malformed completion response: {}",
                    truncate(&text)
                ))),
            };
        }
        if is_context_overflow(&text) {
            return Attempt::Fail(BackendError::ContextOverflow(truncate(&text)));
        }
        let msg = format!("HTTP {status}: {}", truncate(&text));
        if status.as_u16() == 429 || status.is_server_error() {
            Attempt::Retry(msg)
        } else {
            Attempt::Fail(BackendError::BackendUnavailable(msg))
        }
    }
}

fn truncate(text: &str) -> String {
    text.chars().take(500).collect()
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, key: &QueryKey, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let body = self.body(messages);
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let exp = self.cfg.backoff_base_ms.saturating_mul(1u64 << (attempt - 1).min(20));
                thread::sleep(Duration::from_millis(exp.min(self.cfg.backoff_max_ms)));
            }
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg) => {
                    tracing::warn!(program = %key.program_id, query = key.ordinal, attempt, "transient backend failure: {msg}");
                    last = msg;
                }
            }
        }
        Err(BackendError::BackendUnavailable(format!(
            "retries exhausted after {} attempts: {last}",
            self.cfg.max_retries + 1
        )))
    }
}
