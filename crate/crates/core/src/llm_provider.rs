//! Completion and embedding access.
//!
//! Two backends implement [`LanguageModel`]:
//!
//! - [`ReplayProvider`] answers completions from a recorded [`Transcript`] and
//!   embeds text with [`pseudo_embed`]. Runs against it are deterministic.
//! - [`LiveProvider`] speaks the common chat-completions / embeddings JSON
//!   wire shape over HTTP, with bounded retries and an optional rate limit.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::scalar::Real;

pub const DEFAULT_EMBEDDING_DIM: usize = 1536;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("transcript exhausted at entry {index}")]
    Exhausted { index: usize },
    #[error("transcript entry {index} expects {expect:?}, which the prompt does not contain")]
    Mismatch { index: usize, expect: String },
    #[error("transcript {}: line {line}: {message}", .path.display())]
    TranscriptFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("embedding has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains a non-finite component")]
    NonFinite,
}

pub type Result<T, E = ProviderError> = std::result::Result<T, E>;

/// A fully rendered prompt ready to send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub template_id: String,
    pub text: String,
    pub temperature: f64,
    #[serde(default)]
    pub tag: String,
}

impl PromptRequest {
    /// A request at temperature 0.
    pub fn new(template_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            template_id: template_id.into(),
            text: text.into(),
            temperature: 0.0,
            tag: String::new(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    fn check(&self) -> Result<()> {
        if self.text.is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt text".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Live,
    Replay,
}

/// Raw model output, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub provider: ProviderKind,
}

/// A dense embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding<F> {
    values: Vec<F>,
}

impl<F: Real> Embedding<F> {
    /// Wraps raw values, rejecting non-finite components.
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn norm(&self) -> F {
        self.values.iter().fold(F::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn cast<G: Real>(&self) -> Embedding<G> {
        Embedding {
            values: self
                .values
                .iter()
                .map(|v| G::from(*v).expect("finite float casts"))
                .collect(),
        }
    }
}

/// Anything that can complete prompts and embed text.
pub trait LanguageModel {
    fn complete(&mut self, req: &PromptRequest) -> Result<CompletionResult>;
    fn embed(&mut self, text: &str) -> Result<crate::EmbeddingVector>;
    fn embedding_dim(&self) -> usize;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(state, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// splitmix64 output mixing; FNV-1a alone barely moves its high bits when
/// only the last input byte changes.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic stand-in for an embedding endpoint.
///
/// Component `i` is `mix64(FNV-1a-64(seed.to_le_bytes() ++ (i as u64).to_le_bytes()
/// ++ text.as_bytes()))`; the top 53 bits are mapped to `[-1, 1)` and the
/// vector is L2-normalized. A zero vector (never observed in practice)
/// falls back to the first basis vector.
pub fn pseudo_embed(text: &str, dim: usize, seed: u64) -> crate::EmbeddingVector {
    assert!(dim >= 1, "embedding dimension must be at least 1");
    let base = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    let mut values: Vec<f64> = (0..dim as u64)
        .map(|i| {
            let h = mix64(fnv1a(fnv1a(base, &i.to_le_bytes()), text.as_bytes()));
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    } else {
        values[0] = 1.0;
    }
    Embedding { values }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    pub response: String,
}

/// An ordered list of canned completions, consumed strictly in order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    cursor: usize,
}

impl Transcript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries, cursor: 0 }
    }

    /// Reads a JSON Lines transcript. Blank lines are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProviderError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|(line, message)| ProviderError::TranscriptFormat {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses JSON Lines text; errors carry the 1-based line number.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("transcript entries serialize") + "\n")
            .collect()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.cursor
    }

    /// Returns the entry at the cursor and advances. If the entry carries an
    /// `expect` substring the prompt must contain it; on mismatch the cursor
    /// does not move.
    pub fn replay_next(&mut self, req: &PromptRequest) -> Result<CompletionResult> {
        let index = self.cursor;
        let entry = self
            .entries
            .get(index)
            .ok_or(ProviderError::Exhausted { index })?;
        if let Some(expect) = &entry.expect {
            if !req.text.contains(expect.as_str()) {
                return Err(ProviderError::Mismatch {
                    index,
                    expect: expect.clone(),
                });
            }
        }
        self.cursor += 1;
        Ok(CompletionResult {
            text: entry.response.clone(),
            provider: ProviderKind::Replay,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    /// Base URL; `/chat/completions` and `/embeddings` are appended.
    pub endpoint: String,
    pub model: String,
    pub embedding_model: String,
    pub embedding_dim: usize,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_retries: usize,
    /// First retry delay; doubles on each further retry.
    pub backoff_ms: u64,
    /// Minimum spacing between request starts, shared by clones of a client.
    pub min_interval_ms: u64,
    pub timeout_secs: u64,
    /// Seed for replay-mode pseudo embeddings.
    pub seed: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Replay,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4-0613".into(),
            embedding_model: "text-embedding-ada-002".into(),
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            api_key_env: "OPENAI_API_KEY".into(),
            max_retries: 3,
            backoff_ms: 1000,
            min_interval_ms: 0,
            timeout_secs: 120,
            seed: 0,
        }
    }
}

/// Transcript-backed provider.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    transcript: Transcript,
    dim: usize,
    seed: u64,
}

impl ReplayProvider {
    pub fn new(transcript: Transcript, dim: usize, seed: u64) -> Self {
        Self {
            transcript,
            dim,
            seed,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

impl LanguageModel for ReplayProvider {
    fn complete(&mut self, req: &PromptRequest) -> Result<CompletionResult> {
        req.check()?;
        self.transcript.replay_next(req)
    }

    fn embed(&mut self, text: &str) -> Result<crate::EmbeddingVector> {
        if text.is_empty() {
            return Err(ProviderError::InvalidRequest("empty text to embed".into()));
        }
        Ok(pseudo_embed(text, self.dim, self.seed))
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Default)]
struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let sleep_for = {
            let mut slot = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let start = slot.map_or(now, |s| s.max(now));
            *slot = Some(start + self.interval);
            start - now
        };
        if !sleep_for.is_zero() {
            thread::sleep(sleep_for);
        }
    }
}

/// HTTP client for chat-completions style endpoints. Clones share the
/// connection pool and rate limiter, so a clone per session is cheap.
#[derive(Clone)]
pub struct LiveProvider {
    config: ProviderConfig,
    api_key: String,
    agent: ureq::Agent,
    limiter: Arc<RateLimiter>,
}

impl std::fmt::Debug for LiveProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveProvider")
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model)
            .finish_non_exhaustive()
    }
}

enum Attempt {
    Retry(ProviderError),
    Fail(ProviderError),
}

impl LiveProvider {
    /// Reads the API key from the environment variable named in the config.
    pub fn from_env(config: ProviderConfig) -> Result<Self> {
        let key = std::env::var(&config.api_key_env).map_err(|_| {
            ProviderError::Config(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        Self::with_key(config, key)
    }

    pub fn with_key(config: ProviderConfig, api_key: String) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(ProviderError::Config("endpoint URL is empty".into()));
        }
        if api_key.is_empty() {
            return Err(ProviderError::Config("API key is empty".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        let limiter = Arc::new(RateLimiter {
            interval: Duration::from_millis(config.min_interval_ms),
            next_slot: Mutex::new(None),
        });
        Ok(Self {
            config,
            api_key,
            agent,
            limiter,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn post_once(&self, url: &str, body: &Value) -> std::result::Result<Value, Attempt> {
        self.limiter.wait();
        let response = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => {
                return Err(Attempt::Retry(ProviderError::Transport {
                    attempts: 0,
                    message: e.to_string(),
                }))
            }
        };
        let status = response.status().as_u16();
        let mut text = String::new();
        if let Err(e) = response.body_mut().as_reader().read_to_string(&mut text) {
            return Err(Attempt::Retry(ProviderError::Transport {
                attempts: 0,
                message: e.to_string(),
            }));
        }
        if !(200..300).contains(&status) {
            let err = ProviderError::Status { status, body: text };
            return Err(if status == 429 || status >= 500 {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            });
        }
        serde_json::from_str(&text)
            .map_err(|e| Attempt::Fail(ProviderError::Malformed(e.to_string())))
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let url = self.url(path);
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("retrying {path} (attempt {}/{attempts})", attempt + 1);
                thread::sleep(Duration::from_millis(delay));
            }
            match self.post_once(&url, body) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => last = Some(e),
            }
        }
        Err(match last {
            Some(ProviderError::Transport { message, .. }) => ProviderError::Transport { attempts, message },
            Some(other) => other,
            None => unreachable!("at least one attempt is made"),
        })
    }
}

impl LanguageModel for LiveProvider {
    fn complete(&mut self, req: &PromptRequest) -> Result<CompletionResult> {
        req.check()?;
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": req.text}],
            "temperature": req.temperature,
        });
        let value = self.post("chat/completions", &body)?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))?;
        Ok(CompletionResult {
            text: text.to_string(),
            provider: ProviderKind::Live,
        })
    }

    fn embed(&mut self, text: &str) -> Result<crate::EmbeddingVector> {
        if text.is_empty() {
            return Err(ProviderError::InvalidRequest("empty text to embed".into()));
        }
        let body = json!({"model": self.config.embedding_model, "input": text});
        let value = self.post("embeddings", &body)?;
        let raw = value
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Malformed("missing data[0].embedding".into()))?;
        let values = raw
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| ProviderError::Malformed("non-numeric embedding component".into())))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != self.config.embedding_dim {
            return Err(ProviderError::DimensionMismatch {
                expected: self.config.embedding_dim,
                got: values.len(),
            });
        }
        Embedding::new(values)
    }

    fn embedding_dim(&self) -> usize {
        self.config.embedding_dim
    }
}

/// Either backend behind one concrete type.
#[derive(Debug, Clone)]
pub enum Provider {
    Live(LiveProvider),
    Replay(ReplayProvider),
}

impl LanguageModel for Provider {
    fn complete(&mut self, req: &PromptRequest) -> Result<CompletionResult> {
        match self {
            Provider::Live(p) => p.complete(req),
            Provider::Replay(p) => p.complete(req),
        }
    }

    fn embed(&mut self, text: &str) -> Result<crate::EmbeddingVector> {
        match self {
            Provider::Live(p) => p.embed(text),
            Provider::Replay(p) => p.embed(text),
        }
    }

    fn embedding_dim(&self) -> usize {
        match self {
            Provider::Live(p) => p.embedding_dim(),
            Provider::Replay(p) => p.embedding_dim(),
        }
    }
}
