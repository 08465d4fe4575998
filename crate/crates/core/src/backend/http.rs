//! OpenAI-compatible chat client: `POST {base_url}/chat/completions` with a
//! bearer token, exponential-backoff retries on 429/5xx/transport errors,
//! and a content-addressed disk cache.
//!
//! Cache keys hash `(model, temperature, prompt)`; `max_output_tokens` is
//! deliberately excluded, on the assumption that responses at temperature 0
//! are insensitive to it. Writes go through a temp file and an atomic
//! rename, so concurrent writers of one key serialize and readers never see
//! partial files.

use crate::backend::{BackendConfig, BackendError, ChatModel, ModelRequest, ModelResponse, Usage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub struct HttpChatModel {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
    retry: crate::backend::RetryPolicy,
    cache_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponseBody {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<UsageBody>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct UsageBody {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// On-disk cache entry: the raw response plus the request digest.
#[derive(Serialize, Deserialize)]
struct CacheEntry {
    request: CacheRequestDigest,
    response: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct CacheRequestDigest {
    model: String,
    temperature: f64,
    prompt_sha256: String,
}

fn cache_key(req: &ModelRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(req.model_name.as_bytes());
    hasher.update([0x1f]);
    hasher.update(req.temperature.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(req.rendered_prompt.as_bytes());
    hex::encode(hasher.finalize())
}

fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

impl HttpChatModel {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        let base_url = config
            .base_url
            .clone()
            .ok_or_else(|| BackendError::TransportError("http backend needs a base_url".into()))?;
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            BackendError::AuthError(format!("env var {} is not set", config.api_key_env))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::TransportError(e.to_string()))?;
        Ok(HttpChatModel {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            retry: config.retry.clone(),
            cache_dir: config.cache_dir.clone(),
        })
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(key))
    }

    fn cache_lookup(&self, path: &Path) -> Option<serde_json::Value> {
        let bytes = fs::read(path).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        Some(entry.response)
    }

    fn cache_store(&self, path: &Path, req: &ModelRequest, raw: &serde_json::Value) {
        let entry = CacheEntry {
            request: CacheRequestDigest {
                model: req.model_name.clone(),
                temperature: req.temperature,
                prompt_sha256: prompt_sha256(&req.rendered_prompt),
            },
            response: raw.clone(),
        };
        if let Some(dir) = path.parent() {
            if fs::create_dir_all(dir).is_err() {
                return;
            }
            let tmp = dir.join(format!(
                ".{}.tmp-{}",
                path.file_name().and_then(|n| n.to_str()).unwrap_or("entry"),
                std::process::id()
            ));
            if serde_json::to_vec(&entry)
                .ok()
                .and_then(|b| fs::write(&tmp, b).ok())
                .is_some()
            {
                let _ = fs::rename(&tmp, path);
            }
        }
    }

    fn post_once(&self, req: &ModelRequest) -> Result<AttemptOutcome, BackendError> {
        let body = ChatRequestBody {
            model: &req.model_name,
            messages: [ChatMessage {
                role: "user",
                content: &req.rendered_prompt,
            }],
            temperature: req.temperature,
        };
        let url = format!("{}/chat/completions", self.base_url);
        let sent = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send();
        let resp = match sent {
            Ok(r) => r,
            Err(e) => return Ok(AttemptOutcome::Retry(format!("transport: {}", e))),
        };
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::AuthError(format!(
                "server returned {}",
                status
            )));
        }
        if status.as_u16() == 429 {
            return Ok(AttemptOutcome::RateLimited);
        }
        if status.is_server_error() {
            return Ok(AttemptOutcome::Retry(format!("server returned {}", status)));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::TransportError(format!(
                "{}: {}",
                status, text
            )));
        }
        let raw: serde_json::Value = resp
            .json()
            .map_err(|e| BackendError::TransportError(format!("bad response body: {}", e)))?;
        Ok(AttemptOutcome::Success(raw))
    }
}

enum AttemptOutcome {
    Success(serde_json::Value),
    RateLimited,
    Retry(String),
}

fn extract_text(raw: &serde_json::Value) -> Result<(String, Option<Usage>), BackendError> {
    let parsed: ChatResponseBody = serde_json::from_value(raw.clone())
        .map_err(|e| BackendError::TransportError(format!("bad response body: {}", e)))?;
    let text = parsed
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .unwrap_or_default();
    if text.is_empty() {
        return Err(BackendError::TransportError("empty completion".into()));
    }
    let usage = parsed.usage.map(|u| Usage {
        prompt_tokens: u.prompt_tokens,
        completion_tokens: u.completion_tokens,
    });
    Ok((text, usage))
}

impl ChatModel for HttpChatModel {
    fn complete(&self, req: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let key = cache_key(req);
        let path = self.cache_path(&key);
        if !req.bypass_cache {
            if let Some(path) = &path {
                if let Some(raw) = self.cache_lookup(path) {
                    let (text, usage) = extract_text(&raw)?;
                    return Ok(ModelResponse {
                        text,
                        usage,
                        cached: true,
                        latency_ms: 0,
                    });
                }
            }
        }

        let started = Instant::now();
        let mut rate_limited = false;
        let mut last_error = String::new();
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                let backoff = self
                    .retry
                    .backoff_base_ms
                    .saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match self.post_once(req)? {
                AttemptOutcome::Success(raw) => {
                    let (text, usage) = extract_text(&raw)?;
                    if let Some(path) = &path {
                        self.cache_store(path, req, &raw);
                    }
                    return Ok(ModelResponse {
                        text,
                        usage,
                        cached: false,
                        latency_ms: started.elapsed().as_millis() as u64,
                    });
                }
                AttemptOutcome::RateLimited => {
                    rate_limited = true;
                    last_error = "rate limited".into();
                }
                AttemptOutcome::Retry(reason) => {
                    rate_limited = false;
                    last_error = reason;
                }
            }
        }
        if rate_limited {
            Err(BackendError::RateLimited {
                attempts: self.retry.max_attempts,
            })
        } else {
            Err(BackendError::TransportError(format!(
                "gave up after {} attempts: {}",
                self.retry.max_attempts, last_error
            )))
        }
    }
}
