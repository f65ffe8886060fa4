//! Chat-completions access with three providers — live HTTP, deterministic
//! mock, and record/replay cache — plus token, cost, and latency accounting.
//!
//! The live path POSTs `<base_url>/chat/completions` with bearer auth and
//! retries transient failures with exponential backoff. Replay looks
//! completions up by a content hash of (model, messages, params) and never
//! touches the network. The mock derives a synthetic numbered list from the
//! prompt hash and a fixture title pool, so identical requests always yield
//! identical bytes.
//!
//! Token counts come from the provider's usage fields when live; mock and
//! replay-recorded counts fall back to the approximate ceil(chars/4).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::promptgen::PromptBundle;

/// Environment variable holding the bearer token for live runs.
pub const ENV_API_KEY: &str = "RECLLM_API_KEY";
/// Environment variable holding the endpoint base URL for live runs.
pub const ENV_BASE_URL: &str = "RECLLM_BASE_URL";

/// Default cost per 1000 tokens, in dollars.
pub const DEFAULT_ALPHA: f64 = 0.02;
/// Default response token cap.
pub const DEFAULT_MAX_TOKENS: u32 = 800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            model: "gpt-3.5-turbo".to_string(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderTag {
    Live,
    Mock,
    Replay,
}

/// The assistant message plus accounting fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_s: f64,
    pub provider: ProviderTag,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("replay cache miss for key {key}")]
    CacheMiss { key: String },
    #[error("replay store {path}: {message}")]
    ReplayStore { path: String, message: String },
    #[error("missing configuration: {0}")]
    Config(String),
    #[error("record store io: {0}")]
    RecordIo(std::io::Error),
}

// ---------------------------------------------------------------------------
// Wire types and transport
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    pub content: String,
}

impl WireMessage {
    pub fn system(content: impl Into<String>) -> Self {
        WireMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        WireMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

fn bundle_messages(bundle: &PromptBundle) -> Vec<WireMessage> {
    let mut messages = Vec::with_capacity(2);
    if let Some(system) = &bundle.system_message {
        messages.push(WireMessage::system(system.clone()));
    }
    messages.push(WireMessage::user(bundle.user_message.clone()));
    messages
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [WireMessage],
    temperature: f64,
    max_tokens: u32,
}

/// Raw HTTP reply: status code and parsed JSON body.
#[derive(Debug, Clone)]
pub struct TransportReply {
    pub status: u16,
    pub body: serde_json::Value,
}

/// The single seam through which live requests leave the process. Tests and
/// invariant checks inject counting or scripted implementations.
pub trait Transport: Send + Sync {
    fn post_chat(
        &self,
        url: &str,
        api_key: &str,
        body: &serde_json::Value,
    ) -> Result<TransportReply, String>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        HttpTransport {
            client: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("reqwest client construction cannot fail with these options"),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(Duration::from_secs(120))
    }
}

impl Transport for HttpTransport {
    fn post_chat(
        &self,
        url: &str,
        api_key: &str,
        body: &serde_json::Value,
    ) -> Result<TransportReply, String> {
        let response = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body: serde_json::Value = response.json().map_err(|e| e.to_string())?;
        Ok(TransportReply { status, body })
    }
}

/// Counts every outbound request before delegating; lets tests assert that
/// replay and mock providers perform no network activity.
pub struct CountingTransport<T> {
    inner: T,
    calls: AtomicUsize,
}

impl<T: Transport> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        CountingTransport {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn post_chat(
        &self,
        url: &str,
        api_key: &str,
        body: &serde_json::Value,
    ) -> Result<TransportReply, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.post_chat(url, api_key, body)
    }
}

/// Replays a canned sequence of transport outcomes, then repeats the last.
pub struct ScriptedTransport {
    replies: Mutex<Vec<Result<TransportReply, String>>>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new(replies: Vec<Result<TransportReply, String>>) -> Self {
        ScriptedTransport {
            replies: Mutex::new(replies),
            calls: AtomicUsize::new(0),
        }
    }

    /// A reply shaped like a chat-completions success.
    pub fn ok_reply(text: &str, prompt_tokens: u64, completion_tokens: u64) -> TransportReply {
        TransportReply {
            status: 200,
            body: serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": text}}],
                "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
            }),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for ScriptedTransport {
    fn post_chat(
        &self,
        _url: &str,
        _key: &str,
        _body: &serde_json::Value,
    ) -> Result<TransportReply, String> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        let replies = self.replies.lock().unwrap();
        let idx = n.min(replies.len().saturating_sub(1));
        replies
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Err("scripted transport has no replies".into()))
    }
}

/// A transport that must never be reached.
pub struct PanicTransport;

impl Transport for PanicTransport {
    fn post_chat(
        &self,
        url: &str,
        _key: &str,
        _body: &serde_json::Value,
    ) -> Result<TransportReply, String> {
        panic!("network transport invoked at {url} in an offline provider mode");
    }
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Backoff for attempt i sleeps base * 2^i, plus jitter.
    pub base: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base: Duration::from_secs(1),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Zero-delay policy for tests.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base: Duration::ZERO,
            jitter: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: String,
    pub retry: RetryPolicy,
}

impl LiveConfig {
    /// Read endpoint and credential from `RECLLM_BASE_URL` / `RECLLM_API_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let base_url = std::env::var(ENV_BASE_URL)
            .map_err(|_| LlmError::Config(format!("{ENV_BASE_URL} is not set")))?;
        let api_key = std::env::var(ENV_API_KEY)
            .map_err(|_| LlmError::Config(format!("{ENV_API_KEY} is not set")))?;
        Ok(LiveConfig {
            base_url,
            api_key,
            retry: RetryPolicy::default(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MockConfig {
    /// Title pool the synthetic lists draw from.
    pub titles: Vec<String>,
    /// Number of lines per synthetic response.
    pub list_len: usize,
    pub seed: u64,
}

impl MockConfig {
    pub fn new(titles: Vec<String>, list_len: usize, seed: u64) -> Self {
        assert!(
            !titles.is_empty(),
            "mock provider needs a non-empty title pool"
        );
        MockConfig {
            titles,
            list_len,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayConfig {
    pub path: PathBuf,
    /// Strict mode fails on a cache miss; non-strict falls back to a
    /// deterministic mock response derived from the key.
    pub strict: bool,
}

pub enum Provider {
    Live(LiveConfig),
    Mock(MockConfig),
    Replay(ReplayConfig),
}

// ---------------------------------------------------------------------------
// Replay store
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub key_hash: String,
    pub model: String,
    pub messages: Vec<WireMessage>,
    pub params: ReplayParams,
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Content hash of (model, messages, params): the replay key.
pub fn request_key(params: &CompletionParams, messages: &[WireMessage]) -> String {
    #[derive(Serialize)]
    struct KeyRepr<'a> {
        model: &'a str,
        messages: &'a [WireMessage],
        temperature: f64,
        max_tokens: u32,
    }
    let canonical = serde_json::to_vec(&KeyRepr {
        model: &params.model,
        messages,
        temperature: params.temperature,
        max_tokens: params.max_tokens,
    })
    .expect("key serialization is infallible");
    let digest = Sha256::digest(&canonical);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

fn load_replay_store(path: &Path) -> Result<HashMap<String, ReplayRecord>, LlmError> {
    let file = File::open(path).map_err(|e| LlmError::ReplayStore {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut store = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LlmError::ReplayStore {
            path: path.display().to_string(),
            message: format!("line {}: {e}", idx + 1),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReplayRecord =
            serde_json::from_str(&line).map_err(|e| LlmError::ReplayStore {
                path: path.display().to_string(),
                message: format!("line {}: {e}", idx + 1),
            })?;
        store.insert(record.key_hash.clone(), record);
    }
    Ok(store)
}

// ---------------------------------------------------------------------------
// Cost ledger
// ---------------------------------------------------------------------------

/// (total_tokens / 1000) * alpha.
pub fn estimate_cost(total_tokens: u64, alpha: f64) -> f64 {
    (total_tokens as f64 * alpha) / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_s: f64,
    pub cost: f64,
    pub provider: ProviderTag,
}

/// Append-only per-call cost log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    /// Cost per 1000 tokens.
    pub alpha: f64,
    pub records: Vec<CallRecord>,
    /// Prompts per user in the run that produced this ledger, when known.
    pub prompts_per_user: Option<u32>,
}

impl CostLedger {
    pub fn new(alpha: f64) -> Self {
        CostLedger {
            alpha,
            records: Vec::new(),
            prompts_per_user: None,
        }
    }

    pub fn record(&mut self, response: &RawResponse) {
        self.records.push(CallRecord {
            prompt_tokens: response.prompt_tokens,
            completion_tokens: response.completion_tokens,
            latency_s: response.latency_s,
            cost: estimate_cost(
                response.prompt_tokens + response.completion_tokens,
                self.alpha,
            ),
            provider: response.provider,
        });
    }

    pub fn total_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_s: f64,
    pub median_s: f64,
    /// Nearest-rank 95th percentile.
    pub p95_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub calls: usize,
    pub total_cost: f64,
    pub total_prompt_tokens: u64,
    pub total_completion_tokens: u64,
    pub mean_tokens_per_call: f64,
    pub prompts_per_user: Option<u32>,
    /// Absent when the ledger is empty.
    pub latency: Option<LatencyStats>,
}

pub fn ledger_summary(ledger: &CostLedger) -> LedgerSummary {
    let calls = ledger.records.len();
    let total_prompt: u64 = ledger.records.iter().map(|r| r.prompt_tokens).sum();
    let total_completion: u64 = ledger.records.iter().map(|r| r.completion_tokens).sum();
    // costs are summed in sorted order so the total does not depend on the
    // interleaving of concurrent workers
    let mut costs: Vec<f64> = ledger.records.iter().map(|r| r.cost).collect();
    costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total_cost: f64 = costs.iter().sum();
    let latency = if calls == 0 {
        None
    } else {
        let mut sorted: Vec<f64> = ledger.records.iter().map(|r| r.latency_s).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = sorted.iter().sum::<f64>() / calls as f64;
        let median = if calls % 2 == 1 {
            sorted[calls / 2]
        } else {
            (sorted[calls / 2 - 1] + sorted[calls / 2]) / 2.0
        };
        let p95_rank = ((0.95 * calls as f64).ceil() as usize).clamp(1, calls);
        Some(LatencyStats {
            mean_s: mean,
            median_s: median,
            p95_s: sorted[p95_rank - 1],
        })
    };
    LedgerSummary {
        calls,
        total_cost,
        total_prompt_tokens: total_prompt,
        total_completion_tokens: total_completion,
        mean_tokens_per_call: if calls == 0 {
            0.0
        } else {
            (total_prompt + total_completion) as f64 / calls as f64
        },
        prompts_per_user: ledger.prompts_per_user,
        latency,
    }
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

/// Approximate token count: ceil(chars / 4).
pub fn approx_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

fn approx_prompt_tokens(messages: &[WireMessage]) -> u64 {
    let chars: u64 = messages
        .iter()
        .map(|m| m.content.chars().count() as u64)
        .sum();
    chars.div_ceil(4)
}

/// Shareable completion client; the ledger is an append-only log behind a
/// mutex, the replay store is read-only during runs.
pub struct LlmClient {
    provider: Provider,
    transport: Arc<dyn Transport>,
    replay_store: Option<HashMap<String, ReplayRecord>>,
    recorder: Option<Mutex<File>>,
    ledger: Mutex<CostLedger>,
}

impl LlmClient {
    pub fn new(provider: Provider, alpha: f64) -> Result<Self, LlmError> {
        let transport: Arc<dyn Transport> = match &provider {
            Provider::Live(_) => Arc::new(HttpTransport::default()),
            _ => Arc::new(PanicTransport),
        };
        Self::with_transport(provider, alpha, transport)
    }

    /// Construct with an injected transport (tests, invariant checks).
    pub fn with_transport(
        provider: Provider,
        alpha: f64,
        transport: Arc<dyn Transport>,
    ) -> Result<Self, LlmError> {
        let replay_store = match &provider {
            Provider::Replay(cfg) => Some(load_replay_store(&cfg.path)?),
            _ => None,
        };
        Ok(LlmClient {
            provider,
            transport,
            replay_store,
            recorder: None,
            ledger: Mutex::new(CostLedger::new(alpha)),
        })
    }

    /// Append every completion to a replay JSONL at `path`.
    pub fn record_to(mut self, path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(LlmError::RecordIo)?;
        self.recorder = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn provider_tag(&self) -> ProviderTag {
        match self.provider {
            Provider::Live(_) => ProviderTag::Live,
            Provider::Mock(_) => ProviderTag::Mock,
            Provider::Replay(_) => ProviderTag::Replay,
        }
    }

    pub fn ledger_snapshot(&self) -> CostLedger {
        self.ledger.lock().unwrap().clone()
    }

    pub fn set_prompts_per_user(&self, m: u32) {
        self.ledger.lock().unwrap().prompts_per_user = Some(m);
    }

    /// Send one prompt bundle and account the call.
    pub fn complete(
        &self,
        bundle: &PromptBundle,
        params: &CompletionParams,
    ) -> Result<RawResponse, LlmError> {
        let messages = bundle_messages(bundle);
        let response = match &self.provider {
            Provider::Mock(cfg) => self.mock_response(cfg, params, &messages),
            Provider::Replay(cfg) => self.replay_response(cfg, params, &messages)?,
            Provider::Live(cfg) => self.live_response(cfg, params, &messages)?,
        };
        if let Some(recorder) = &self.recorder {
            let record = ReplayRecord {
                key_hash: request_key(params, &messages),
                model: params.model.clone(),
                messages: messages.clone(),
                params: ReplayParams {
                    temperature: params.temperature,
                    max_tokens: params.max_tokens,
                },
                text: response.text.clone(),
                prompt_tokens: response.prompt_tokens,
                completion_tokens: response.completion_tokens,
                latency: response.latency_s,
            };
            let mut file = recorder.lock().unwrap();
            let line = serde_json::to_string(&record).expect("record serialization is infallible");
            writeln!(file, "{line}").map_err(LlmError::RecordIo)?;
        }
        self.ledger.lock().unwrap().record(&response);
        Ok(response)
    }

    fn mock_response(
        &self,
        cfg: &MockConfig,
        params: &CompletionParams,
        messages: &[WireMessage],
    ) -> RawResponse {
        let text = synthesize_list(cfg, &request_key(params, messages));
        RawResponse {
            prompt_tokens: approx_prompt_tokens(messages),
            completion_tokens: approx_tokens(&text),
            text,
            latency_s: 0.0,
            provider: ProviderTag::Mock,
        }
    }

    fn replay_response(
        &self,
        cfg: &ReplayConfig,
        params: &CompletionParams,
        messages: &[WireMessage],
    ) -> Result<RawResponse, LlmError> {
        let key = request_key(params, messages);
        let store = self
            .replay_store
            .as_ref()
            .expect("replay store loaded at construction");
        match store.get(&key) {
            Some(record) => Ok(RawResponse {
                text: record.text.clone(),
                prompt_tokens: record.prompt_tokens,
                completion_tokens: record.completion_tokens,
                latency_s: record.latency,
                provider: ProviderTag::Replay,
            }),
            None if cfg.strict => Err(LlmError::CacheMiss { key }),
            None => {
                // partial caches in offline development degrade to the mock
                let fallback = MockConfig::new(vec!["Untitled (2000)".to_string()], 1, 0);
                let text = synthesize_list(&fallback, &key);
                Ok(RawResponse {
                    prompt_tokens: approx_prompt_tokens(messages),
                    completion_tokens: approx_tokens(&text),
                    text,
                    latency_s: 0.0,
                    provider: ProviderTag::Mock,
                })
            }
        }
    }

    fn live_response(
        &self,
        cfg: &LiveConfig,
        params: &CompletionParams,
        messages: &[WireMessage],
    ) -> Result<RawResponse, LlmError> {
        let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
        let body = serde_json::to_value(ChatRequest {
            model: &params.model,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        })
        .expect("request serialization is infallible");

        let mut last_error = String::new();
        for attempt in 0..cfg.retry.max_attempts {
            if attempt > 0 {
                std::thread::sleep(backoff_delay(&cfg.retry, attempt));
            }
            let started = Instant::now();
            match self.transport.post_chat(&url, &cfg.api_key, &body) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let latency = started.elapsed().as_secs_f64();
                    return parse_chat_reply(&reply.body, messages, latency);
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last_error = format!("status {}", reply.status);
                }
                Ok(reply) => {
                    return Err(LlmError::Provider {
                        status: reply.status,
                        body: reply.body.to_string(),
                    });
                }
                Err(e) => last_error = e,
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts: cfg.retry.max_attempts,
            last: last_error,
        })
    }
}

fn backoff_delay(policy: &RetryPolicy, attempt: u32) -> Duration {
    let base = policy.base.as_secs_f64() * 2f64.powi(attempt as i32 - 1);
    let jitter = if policy.jitter {
        // thread-local entropy is fine here: jitter only spreads retries
        rand::rng().random_range(0.0..policy.base.as_secs_f64().max(0.001))
    } else {
        0.0
    };
    Duration::from_secs_f64(base + jitter)
}

fn parse_chat_reply(
    body: &serde_json::Value,
    messages: &[WireMessage],
    latency_s: f64,
) -> Result<RawResponse, LlmError> {
    let text = body
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?
        .to_string();
    let prompt_tokens = body
        .pointer("/usage/prompt_tokens")
        .and_then(|v| v.as_u64())
        .unwrap_or_else(|| approx_prompt_tokens(messages));
    let completion_tokens = body
        .pointer("/usage/completion_tokens")
        .and_then(|v| v.as_u64())
        .unwrap_or_else(|| approx_tokens(&text));
    Ok(RawResponse {
        text,
        prompt_tokens,
        completion_tokens,
        latency_s,
        provider: ProviderTag::Live,
    })
}

/// Deterministic numbered list drawn from the fixture pool, seeded by the
/// request key.
fn synthesize_list(cfg: &MockConfig, key_hash: &str) -> String {
    let mut seed_bytes = [0u8; 8];
    for (i, byte) in key_hash.as_bytes().iter().enumerate() {
        seed_bytes[i % 8] ^= *byte;
    }
    let seed = u64::from_le_bytes(seed_bytes) ^ cfg.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.list_len.min(cfg.titles.len());
    let picked = rand::seq::index::sample(&mut rng, cfg.titles.len(), n);
    let mut out = String::new();
    for (rank, idx) in picked.iter().enumerate() {
        out.push_str(&format!("{}. \"{}\"\n", rank + 1, cfg.titles[idx]));
    }
    out
}
