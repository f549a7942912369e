//! Completion providers, the replay cache and batch prompt prediction.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use argqual_core::predictions::{Prediction, PredictionSet};
use argqual_core::prompt::{build_prompt, parse_response, select_few_shot, PromptRequest, PromptResponse};
use argqual_core::{ArgumentInstance, Task};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fsutil::{read_json, write_json};

pub trait CompletionProvider: Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &PromptRequest) -> Result<String>;
}

/// Answers from a script: the first rule whose needle occurs in the
/// prompt's final (unanswered) block wins, else `default`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockProvider {
    pub default: String,
    #[serde(default)]
    pub rules: Vec<(String, String)>,
}

impl MockProvider {
    pub fn always(reply: impl Into<String>) -> Self {
        MockProvider {
            default: reply.into(),
            rules: Vec::new(),
        }
    }
}

impl CompletionProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &PromptRequest) -> Result<String> {
        let target = request.prompt.rsplit("\n\n").next().unwrap_or(&request.prompt);
        Ok(self
            .rules
            .iter()
            .find(|(needle, _)| target.contains(needle.as_str()))
            .map(|(_, reply)| reply.clone())
            .unwrap_or_else(|| self.default.clone()))
    }
}

/// Never calls out; every cache miss is an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayOnly;

impl CompletionProvider for ReplayOnly {
    fn name(&self) -> &str {
        "replay-only"
    }

    fn complete(&self, request: &PromptRequest) -> Result<String> {
        Err(CliError::CacheMiss(request.cache_key()))
    }
}

/// `POST {base_url}/completions` in the OpenAI legacy completions format.
pub struct OpenAiCompatible {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    max_retries: u32,
}

impl OpenAiCompatible {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration, max_retries: u32) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| CliError::Provider(format!("http client: {e}")))?;
        Ok(OpenAiCompatible {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
            max_retries,
        })
    }

    fn once(&self, request: &PromptRequest) -> std::result::Result<String, (bool, String)> {
        let body = serde_json::json!({
            "model": request.model_id,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "frequency_penalty": request.frequency_penalty,
            "presence_penalty": request.presence_penalty,
            "max_tokens": request.max_tokens,
        });
        let url = format!("{}/completions", self.base_url);
        let mut req = self
            .client
            .post(&url)
            .header("content-type", "application/json")
            .body(body.to_string());
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, format!("request to {url} failed: {e}")))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, format!("reading reply from {url}: {e}")))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err((false, format!("{url}: authentication failed (HTTP {status})")));
        }
        if !status.is_success() {
            let retry = status.as_u16() == 429 || status.is_server_error();
            return Err((retry, format!("{url}: HTTP {status}: {}", text.chars().take(200).collect::<String>())));
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| (false, format!("{url}: reply is not JSON: {e}")))?;
        v["choices"][0]["text"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, format!("{url}: reply has no choices[0].text")))
    }
}

impl CompletionProvider for OpenAiCompatible {
    fn name(&self) -> &str {
        "http-openai-compatible"
    }

    fn complete(&self, request: &PromptRequest) -> Result<String> {
        let mut attempt = 0;
        loop {
            match self.once(request) {
                Ok(text) => return Ok(text),
                Err((true, msg)) if attempt < self.max_retries => {
                    log::warn!("{msg}; retrying");
                    std::thread::sleep(Duration::from_millis(250 << attempt.min(6)));
                    attempt += 1;
                }
                Err((_, msg)) => return Err(CliError::Provider(msg)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub request: PromptRequest,
    pub raw_text: String,
    /// Seconds since the Unix epoch at which the record was written.
    pub timestamp: u64,
    pub provider: String,
}

/// One JSON file per request, named by its cache key.
#[derive(Debug, Clone)]
pub struct ReplayCache {
    dir: PathBuf,
}

impl ReplayCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheRecord>> {
        let p = self.path(key);
        if !p.exists() {
            return Ok(None);
        }
        read_json(&p).map(Some)
    }

    pub fn put(&self, record: &CacheRecord) -> Result<()> {
        write_json(&self.path(&record.key), record)
    }
}

pub fn complete(provider: &dyn CompletionProvider, request: &PromptRequest, cache: Option<&ReplayCache>) -> Result<PromptResponse> {
    request.validate()?;
    let key = request.cache_key();
    if let Some(cache) = cache {
        if let Some(rec) = cache.get(&key)? {
            return Ok(PromptResponse {
                raw_text: rec.raw_text,
                provider: rec.provider,
                cached: true,
            });
        }
    }
    let raw_text = provider.complete(request)?;
    if let Some(cache) = cache {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        cache.put(&CacheRecord {
            key,
            request: request.clone(),
            raw_text: raw_text.clone(),
            timestamp,
            provider: provider.name().to_string(),
        })?;
    }
    Ok(PromptResponse {
        raw_text,
        provider: provider.name().to_string(),
        cached: false,
    })
}

/// Token bucket shared by concurrent callers; a non-positive rate disables it.
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_second: f64, burst: u32) -> Self {
        let burst = f64::from(burst.max(1));
        RateLimiter {
            rate: per_second,
            burst,
            state: Mutex::new((burst, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        if self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap_or_else(|p| p.into_inner());
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(self.burst);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSettings {
    /// Request template; its `prompt` field is replaced per target.
    pub request: PromptRequest,
    /// Source tag written on every prediction.
    pub source: String,
    pub parallelism: usize,
    pub requests_per_second: f64,
    pub burst: u32,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            request: PromptRequest::default(),
            source: "gpt3".into(),
            parallelism: 4,
            requests_per_second: 0.0,
            burst: 1,
        }
    }
}

/// Few-shot prompts every target for `task`; unparseable replies fall back
/// to the negative label and are flagged.
pub fn prompt_predict(
    train: &[ArgumentInstance],
    targets: &[ArgumentInstance],
    task: Task,
    provider: &dyn CompletionProvider,
    cache: Option<&ReplayCache>,
    settings: &PromptSettings,
) -> Result<PredictionSet> {
    let few_shot = select_few_shot(train, task)?;
    let requests: Vec<PromptRequest> = targets
        .iter()
        .map(|t| {
            Ok(PromptRequest {
                prompt: build_prompt(&few_shot, t, task)?,
                ..settings.request.clone()
            })
        })
        .collect::<Result<_>>()?;

    let limiter = RateLimiter::new(settings.requests_per_second, settings.burst);
    let next = AtomicUsize::new(0);
    let workers = settings.parallelism.clamp(1, requests.len().max(1));
    let mut answers: Vec<(usize, Result<PromptResponse>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(req) = requests.get(i) else { break };
                        let key = req.cache_key();
                        let hit = cache.map(|c| c.path(&key).exists()).unwrap_or(false);
                        if !hit {
                            limiter.acquire();
                        }
                        let r = complete(provider, req, cache);
                        let stop = r.is_err();
                        out.push((i, r));
                        if stop {
                            break;
                        }
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap_or_default()).collect()
    });
    answers.sort_by_key(|(i, _)| *i);

    let mut rows = Vec::with_capacity(targets.len());
    for (i, answer) in answers {
        let response = answer?;
        let (value, flagged) = parse_response(&response.raw_text, task).or_fallback();
        let mut p = Prediction::new(targets[i].id.clone(), task, value, settings.source.clone());
        p.flagged = flagged;
        rows.push(p);
    }
    if rows.len() != targets.len() {
        return Err(CliError::Provider("a completion worker stopped early".into()));
    }
    Ok(PredictionSet::new(rows)?)
}
