//! Model-call abstraction: prompt templates, an OpenAI-compatible HTTP chat
//! client with disk cache and retry, a deterministic rule-based oracle, and
//! output parsers.
//!
//! All completions go through [`Backend`], which bounds in-flight requests
//! to the configured concurrency limit regardless of the underlying model.

mod http;
mod oracle;
pub mod parsers;
pub mod prompts;

pub use http::HttpChatModel;
pub use oracle::{catalog_from_items, AttributeCatalog, OracleModel};
pub use parsers::{
    parse_condition_list, parse_paragraph_ranking, parse_token_ranking, OutputParseError,
};
pub use prompts::{numbered_list, render_prompt, PromptKind};

use crate::engine::ItemLevel;
use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use thiserror::Error;

/// Default env var holding the API key for HTTP backends.
pub const DEFAULT_API_KEY_ENV: &str = "MCRANK_API_KEY";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("ranking prompt expects {expected:?} items but {item_id} is {got:?}")]
    LevelMismatch {
        expected: ItemLevel,
        got: ItemLevel,
        item_id: String,
    },
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("oracle could not interpret the prompt: {0}")]
    PromptUnparseable(String),
}

/// A fully rendered model request.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRequest {
    pub prompt_kind: PromptKind,
    pub rendered_prompt: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Skip the disk cache for this call (used by the invalid-output retry).
    pub bypass_cache: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: String,
    pub usage: Option<Usage>,
    pub cached: bool,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// OpenAI-compatible `POST {base_url}/chat/completions`.
    #[serde(alias = "httpchat")]
    Http,
    /// Deterministic rule-based model; answers via the rank engine.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Required for HTTP backends, ignored by the oracle.
    pub base_url: Option<String>,
    /// Name of the env var holding the bearer token.
    pub api_key_env: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub concurrency_limit: usize,
    pub retry: RetryPolicy,
    /// Response cache directory; `None` disables caching (HTTP only).
    pub cache_dir: Option<std::path::PathBuf>,
    /// Probability that the oracle swaps one adjacent pair in a ranking
    /// answer. Extract/sort answers are never perturbed.
    pub oracle_noise_epsilon: f64,
    pub rng_seed: u64,
    /// Re-ask once (bypassing the cache) when a response fails to parse.
    pub retry_invalid_output: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Oracle,
            base_url: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            model: "oracle".to_string(),
            temperature: 0.0,
            max_output_tokens: 1024,
            concurrency_limit: 4,
            retry: RetryPolicy::default(),
            cache_dir: None,
            oracle_noise_epsilon: 0.0,
            rng_seed: 0,
            retry_invalid_output: false,
        }
    }
}

impl BackendConfig {
    pub fn oracle(seed: u64, epsilon: f64) -> Self {
        BackendConfig {
            rng_seed: seed,
            oracle_noise_epsilon: epsilon,
            ..Self::default()
        }
    }
}

/// Anything that can answer a rendered prompt.
pub trait ChatModel: Send + Sync {
    fn complete(&self, req: &ModelRequest) -> Result<ModelResponse, BackendError>;
}

/// Counting gate bounding concurrent completions.
struct Gate {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Self {
        Gate {
            permits: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.freed.wait(permits).unwrap();
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.gate.permits.lock().unwrap();
        *permits += 1;
        self.gate.freed.notify_one();
    }
}

/// A configured model behind a concurrency gate.
pub struct Backend {
    model: Box<dyn ChatModel>,
    gate: Gate,
    config: BackendConfig,
}

impl Backend {
    /// Build a backend from its config. Oracle backends answer attribute
    /// conditions from `catalog` (item text → labels), typically built from
    /// the dataset under evaluation.
    pub fn new(config: BackendConfig, catalog: AttributeCatalog) -> Result<Backend, BackendError> {
        let model: Box<dyn ChatModel> = match config.kind {
            BackendKind::Oracle => Box::new(OracleModel::new(
                config.rng_seed,
                config.oracle_noise_epsilon,
                catalog,
            )),
            BackendKind::Http => Box::new(HttpChatModel::from_config(&config)?),
        };
        Ok(Backend {
            gate: Gate::new(config.concurrency_limit),
            model,
            config,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    #[cfg(test)]
    pub(crate) fn new_for_tests(model: Box<dyn ChatModel>, config: BackendConfig) -> Backend {
        Backend {
            gate: Gate::new(config.concurrency_limit),
            model,
            config,
        }
    }

    /// Build a request for a rendered prompt using the configured defaults.
    pub fn request(&self, prompt_kind: PromptKind, rendered_prompt: String) -> ModelRequest {
        ModelRequest {
            prompt_kind,
            rendered_prompt,
            model_name: self.config.model.clone(),
            temperature: self.config.temperature,
            max_output_tokens: self.config.max_output_tokens,
            bypass_cache: false,
        }
    }

    /// Complete a request, waiting for a concurrency permit first.
    pub fn complete(&self, req: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let _permit = self.gate.acquire();
        self.model.complete(req)
    }
}
