//! Chat-completion backends.
//!
//! The correction loop talks to a [`ChatClient`] and never learns which
//! backend is behind it. [`HttpClient`] speaks the OpenAI-compatible
//! chat-completions format; [`ScriptedClient`] replays recorded replies keyed
//! by a digest of the request.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Single-string form of a conversation, each role prefixed with `###`.
pub fn flatten_messages(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| format!("### {}\n{}", m.role, m.content))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("server answered with HTTP status {0}")]
    HttpStatus(u16),
    #[error("no scripted reply left for request {key}")]
    ScriptExhausted { key: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("script file line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A blocking, single-shot chat-completion backend.
pub trait ChatClient: Send + Sync {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        (**self).chat(messages)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        (**self).chat(messages)
    }
}

/// Rejects empty conversations and ones that do not open with a system turn.
pub fn check_request(messages: &[ChatMessage]) -> Result<(), ClientError> {
    match messages.first() {
        None => Err(ClientError::InvalidRequest("no messages".into())),
        Some(m) if m.role != Role::System => Err(ClientError::InvalidRequest(format!(
            "first message has role '{}', expected 'system'",
            m.role
        ))),
        Some(_) => Ok(()),
    }
}

/// Hex SHA-256 of the canonical JSON encoding of the message list.
pub fn request_key(messages: &[ChatMessage]) -> String {
    let canonical = serde_json::to_string(messages).expect("messages always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Http,
    #[default]
    Scripted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptMode {
    /// Replies are looked up by request digest.
    #[default]
    Keyed,
    /// Replies are handed out in file order regardless of the request.
    Ordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub backend: Backend,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub retry_budget: u32,
    pub backoff_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub script_path: Option<PathBuf>,
    pub script_mode: ScriptMode,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Scripted,
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "gpt-4".into(),
            temperature: 0.0,
            timeout_secs: 60.0,
            retry_budget: 2,
            backoff_ms: 500,
            api_key_env: "OPENAI_API_KEY".into(),
            script_path: None,
            script_mode: ScriptMode::Keyed,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ClientError::Config(format!("timeout must be positive, got {}", self.timeout_secs)));
        }
        if self.backend == Backend::Scripted && self.script_path.is_none() {
            return Err(ClientError::Config("scripted backend needs a script path".into()));
        }
        Ok(())
    }
}

/// Builds the backend named by `config`.
pub fn build_client(config: &ClientConfig) -> Result<Box<dyn ChatClient>, ClientError> {
    config.validate()?;
    match config.backend {
        Backend::Http => Ok(Box::new(HttpClient::new(config.clone())?)),
        Backend::Scripted => {
            let path = config.script_path.as_ref().expect("checked by validate");
            Ok(Box::new(ScriptedClient::from_path(path, config.script_mode)?))
        }
    }
}

pub struct HttpClient {
    agent: ureq::Agent,
    config: ClientConfig,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

enum Attempt {
    Done(String),
    Retry(ClientError),
    Fail(ClientError),
}

impl HttpClient {
    pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
        if !(config.timeout_secs > 0.0 && config.timeout_secs.is_finite()) {
            return Err(ClientError::Config(format!("timeout must be positive, got {}", config.timeout_secs)));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(Self { agent, config, api_key })
    }

    fn attempt(&self, body: &CompletionRequest<'_>) -> Attempt {
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response = match request.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(ClientError::Timeout { attempts: 1 }),
            Err(ureq::Error::Io(e)) => return Attempt::Retry(ClientError::Transport(e.to_string())),
            Err(e) => return Attempt::Fail(ClientError::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(ClientError::HttpStatus(status));
        }
        if status >= 400 {
            return Attempt::Fail(ClientError::HttpStatus(status));
        }
        let value: serde_json::Value = match response.into_body().read_json() {
            Ok(v) => v,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(ClientError::Timeout { attempts: 1 }),
            Err(e) => return Attempt::Fail(ClientError::MalformedResponse(e.to_string())),
        };
        match value.pointer("/choices/0/message/content").and_then(|c| c.as_str()) {
            Some(text) => Attempt::Done(text.to_string()),
            None => Attempt::Fail(ClientError::MalformedResponse(
                "missing choices[0].message.content".into(),
            )),
        }
    }
}

impl ChatClient for HttpClient {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        check_request(messages)?;
        let body = CompletionRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        };
        let attempts = self.config.retry_budget + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("retrying chat request (attempt {}/{attempts}) after {delay} ms", attempt + 1);
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(match last {
            Some(ClientError::Timeout { .. }) => ClientError::Timeout { attempts },
            Some(e) => e,
            None => ClientError::Transport("no attempt made".into()),
        })
    }
}

/// One line of a script file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub key: String,
    pub reply: String,
}

pub fn read_script<R: BufRead>(input: R) -> Result<Vec<ScriptEntry>, ClientError> {
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| ClientError::Script {
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_script<W: Write>(entries: &[ScriptEntry], mut out: W) -> Result<(), ClientError> {
    for e in entries {
        serde_json::to_writer(&mut out, e).map_err(|e| ClientError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

enum Queue {
    Keyed(HashMap<String, VecDeque<String>>),
    Ordered(VecDeque<String>),
}

/// Replays recorded replies. Repeated requests with the same digest receive
/// that digest's replies in recorded order.
pub struct ScriptedClient {
    queue: Mutex<Queue>,
}

impl ScriptedClient {
    pub fn new(entries: Vec<ScriptEntry>, mode: ScriptMode) -> Self {
        let queue = match mode {
            ScriptMode::Keyed => {
                let mut map: HashMap<String, VecDeque<String>> = HashMap::new();
                for e in entries {
                    map.entry(e.key).or_default().push_back(e.reply);
                }
                Queue::Keyed(map)
            }
            ScriptMode::Ordered => Queue::Ordered(entries.into_iter().map(|e| e.reply).collect()),
        };
        Self {
            queue: Mutex::new(queue),
        }
    }

    pub fn from_path(path: &Path, mode: ScriptMode) -> Result<Self, ClientError> {
        let entries = read_script(BufReader::new(File::open(path)?))?;
        Ok(Self::new(entries, mode))
    }

    /// Replies not yet handed out.
    pub fn remaining(&self) -> usize {
        match &*self.queue.lock().unwrap() {
            Queue::Keyed(map) => map.values().map(VecDeque::len).sum(),
            Queue::Ordered(q) => q.len(),
        }
    }
}

impl ChatClient for ScriptedClient {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        check_request(messages)?;
        let key = request_key(messages);
        let mut queue = self.queue.lock().unwrap();
        let reply = match &mut *queue {
            Queue::Keyed(map) => map.get_mut(&key).and_then(VecDeque::pop_front),
            Queue::Ordered(q) => q.pop_front(),
        };
        reply.ok_or(ClientError::ScriptExhausted { key })
    }
}

/// Adapts a closure into a client.
pub struct FnClient<F>(pub F);

impl<F> ChatClient for FnClient<F>
where
    F: Fn(&[ChatMessage]) -> Result<String, ClientError> + Send + Sync,
{
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        check_request(messages)?;
        (self.0)(messages)
    }
}

/// Forwards to another client and keeps every exchange as a script entry.
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<Vec<ScriptEntry>>,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn entries(&self) -> Vec<ScriptEntry> {
        self.log.lock().unwrap().clone()
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        let reply = self.inner.chat(messages)?;
        self.log.lock().unwrap().push(ScriptEntry {
            key: request_key(messages),
            reply: reply.clone(),
        });
        Ok(reply)
    }
}
