//! Run configuration: TOML file with `${ENV_VAR}` interpolation in string
//! values, overridable field by field from the command line.

use anyhow::{bail, Context, Result};
use mcrank_core::backend::{BackendConfig, BackendKind, RetryPolicy, DEFAULT_API_KEY_ENV};
use mcrank_core::gen::Sample;
use mcrank_core::pipeline::Strategy;
use mcrank_core::ConditionCategory;
use mcrank_core::ItemLevel;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Scenario selector: omitted keys match everything.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFilter {
    pub level: Option<ItemLevel>,
    #[serde(default)]
    pub conditions: Vec<u8>,
    #[serde(default)]
    pub items: Vec<u8>,
    pub category: Option<ConditionCategory>,
}

impl ScenarioFilter {
    pub fn matches_scenario(&self, level: ItemLevel, n_conditions: u8, n_items: u8) -> bool {
        self.level.map(|l| l == level).unwrap_or(true)
            && (self.conditions.is_empty() || self.conditions.contains(&n_conditions))
            && (self.items.is_empty() || self.items.contains(&n_items))
    }

    pub fn matches_sample(&self, sample: &Sample) -> bool {
        self.matches_scenario(
            sample.scenario.level,
            sample.scenario.n_conditions,
            sample.scenario.n_items,
        ) && self.category.map(|c| c == sample.category).unwrap_or(true)
    }
}

impl FromStr for ScenarioFilter {
    type Err = anyhow::Error;

    /// Parse `level=token,conds=2|3,items=5,category=locational`.
    fn from_str(s: &str) -> Result<Self> {
        let mut filter = ScenarioFilter::default();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .with_context(|| format!("filter term {:?} is not key=value", part))?;
            let values: Vec<&str> = value.split('|').collect();
            match key.trim() {
                "level" => {
                    filter.level = Some(match value.trim() {
                        "token" => ItemLevel::Token,
                        "paragraph" => ItemLevel::Paragraph,
                        other => bail!("unknown level {:?}", other),
                    })
                }
                "conds" | "conditions" => {
                    filter.conditions = values
                        .iter()
                        .map(|v| v.trim().parse::<u8>().context("conditions must be numeric"))
                        .collect::<Result<_>>()?
                }
                "items" => {
                    filter.items = values
                        .iter()
                        .map(|v| v.trim().parse::<u8>().context("items must be numeric"))
                        .collect::<Result<_>>()?
                }
                "category" => {
                    filter.category = Some(match value.trim() {
                        "positional" => ConditionCategory::Positional,
                        "locational" => ConditionCategory::Locational,
                        "temporal" => ConditionCategory::Temporal,
                        "trait" => ConditionCategory::Trait,
                        "reason" => ConditionCategory::Reason,
                        other => bail!("unknown category {:?}", other),
                    })
                }
                other => bail!("unknown filter key {:?}", other),
            }
        }
        Ok(filter)
    }
}

/// `run` settings as read from a TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFileConfig {
    pub dataset: Option<PathBuf>,
    pub strategy: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sample_limit: Option<usize>,
    #[serde(default)]
    pub filter: Option<ScenarioFilter>,
    #[serde(default)]
    pub backend: Option<BackendFileConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendFileConfig {
    pub kind: Option<BackendKind>,
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub concurrency_limit: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub oracle_noise_epsilon: Option<f64>,
    pub rng_seed: Option<u64>,
    pub retry_invalid_output: Option<bool>,
    pub retry: Option<RetryFileConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryFileConfig {
    pub max_attempts: Option<u32>,
    pub backoff_base_ms: Option<u64>,
}

/// Replace `${VAR}` with the value of the environment variable `VAR` in
/// every string value of the parsed TOML tree. Unset variables are an error
/// so missing secrets fail loudly.
fn interpolate(value: &mut toml::Value) -> Result<()> {
    let re = regex::Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap();
    match value {
        toml::Value::String(s) => {
            if re.is_match(s) {
                let mut out = String::new();
                let mut last = 0;
                for caps in re.captures_iter(s) {
                    let whole = caps.get(0).unwrap();
                    let name = &caps[1];
                    let val = std::env::var(name)
                        .with_context(|| format!("config references unset env var {}", name))?;
                    out.push_str(&s[last..whole.start()]);
                    out.push_str(&val);
                    last = whole.end();
                }
                out.push_str(&s[last..]);
                *s = out;
            }
        }
        toml::Value::Array(items) => {
            for item in items {
                interpolate(item)?;
            }
        }
        toml::Value::Table(table) => {
            for (_, item) in table.iter_mut() {
                interpolate(item)?;
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn load_run_config(path: &Path) -> Result<RunFileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut value: toml::Value =
        toml::from_str(&text).with_context(|| format!("bad TOML in {}", path.display()))?;
    interpolate(&mut value)?;
    let config: RunFileConfig = value
        .try_into()
        .with_context(|| format!("unexpected config shape in {}", path.display()))?;
    Ok(config)
}

/// Fold file + CLI settings into a backend config; CLI flags win.
#[derive(Debug, Clone, Default)]
pub struct BackendOverrides {
    pub kind: Option<BackendKind>,
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: Option<usize>,
}

pub fn resolve_backend(
    file: Option<&BackendFileConfig>,
    overrides: &BackendOverrides,
) -> BackendConfig {
    let mut cfg = BackendConfig {
        api_key_env: DEFAULT_API_KEY_ENV.to_string(),
        ..BackendConfig::default()
    };
    if let Some(f) = file {
        if let Some(kind) = f.kind {
            cfg.kind = kind;
        }
        cfg.base_url = f.base_url.clone().or(cfg.base_url);
        if let Some(v) = &f.api_key_env {
            cfg.api_key_env = v.clone();
        }
        if let Some(v) = &f.model {
            cfg.model = v.clone();
        }
        if let Some(v) = f.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = f.max_output_tokens {
            cfg.max_output_tokens = v;
        }
        if let Some(v) = f.concurrency_limit {
            cfg.concurrency_limit = v;
        }
        cfg.cache_dir = f.cache_dir.clone().or(cfg.cache_dir);
        if let Some(v) = f.oracle_noise_epsilon {
            cfg.oracle_noise_epsilon = v;
        }
        if let Some(v) = f.rng_seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = f.retry_invalid_output {
            cfg.retry_invalid_output = v;
        }
        if let Some(r) = &f.retry {
            let mut retry = RetryPolicy::default();
            if let Some(v) = r.max_attempts {
                retry.max_attempts = v;
            }
            if let Some(v) = r.backoff_base_ms {
                retry.backoff_base_ms = v;
            }
            cfg.retry = retry;
        }
    }
    if let Some(kind) = overrides.kind {
        cfg.kind = kind;
    }
    cfg.base_url = overrides.base_url.clone().or(cfg.base_url);
    if let Some(v) = &overrides.api_key_env {
        cfg.api_key_env = v.clone();
    }
    if let Some(v) = &overrides.model {
        cfg.model = v.clone();
    }
    if let Some(v) = overrides.epsilon {
        cfg.oracle_noise_epsilon = v;
    }
    if let Some(v) = overrides.seed {
        cfg.rng_seed = v;
    }
    cfg.cache_dir = overrides.cache_dir.clone().or(cfg.cache_dir);
    if let Some(v) = overrides.concurrency {
        cfg.concurrency_limit = v;
    }
    cfg
}

pub fn parse_strategy(s: &str) -> Result<Strategy> {
    Strategy::from_str(s).map_err(|e| anyhow::anyhow!(e))
}
