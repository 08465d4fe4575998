//! The oracle model: a deterministic stand-in for an LLM that answers
//! prompts by running the condition DSL and the rank engine, optionally
//! perturbed by seeded adjacent-swap noise.
//!
//! Noise is a pure function of `(rng_seed, rendered prompt)`: the same
//! request always produces the same answer, so concurrency and caching never
//! change results, and enlarging epsilon only ever adds swaps. Noise applies
//! to ranking prompts only; extraction and sorting answers are exact.

use crate::backend::prompts::{
    CONDITIONS_ANCHOR, CONDITIONS_END, LIST_ANCHOR, TOKEN_ITEMS_ANCHOR, TOKEN_ITEMS_END,
};
use crate::backend::{BackendError, ChatModel, ModelRequest, ModelResponse, PromptKind, Usage};
use crate::condition::{extract_conditions, parse_condition, CONDITION_SEPARATOR};
use crate::engine::{gold_ranking, Item, ItemLevel, Ordering};
use crate::scalar::Scalar;
use crate::seed::{self, tag};
use once_cell::sync::Lazy;
use rand::Rng;
use regex::Regex;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Item text → labeled attributes; the oracle's substitute for the world
/// knowledge a real model would bring.
pub type AttributeCatalog = BTreeMap<String, BTreeMap<String, Scalar>>;

/// Build a catalog from any item collection.
pub fn catalog_from_items<'a>(items: impl IntoIterator<Item = &'a Item>) -> AttributeCatalog {
    items
        .into_iter()
        .map(|i| (i.text.clone(), i.attributes.clone()))
        .collect()
}

pub struct OracleModel {
    seed: u64,
    epsilon: f64,
    catalog: AttributeCatalog,
}

static ITEM_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?m)^Item-(\d+): (.*)$").unwrap());

impl OracleModel {
    pub fn new(seed: u64, epsilon: f64, catalog: AttributeCatalog) -> Self {
        OracleModel {
            seed,
            epsilon,
            catalog,
        }
    }

    fn pseudo_items(&self, texts: &[String], level: ItemLevel) -> Vec<Item> {
        texts
            .iter()
            .enumerate()
            .map(|(idx, text)| Item {
                id: format!("slot-{}", idx),
                text: text.clone(),
                level,
                attributes: self.catalog.get(text).cloned().unwrap_or_default(),
                positional_ok: false,
            })
            .collect()
    }

    fn rank(
        &self,
        condition_string: &str,
        texts: &[String],
        level: ItemLevel,
    ) -> Result<Vec<usize>, BackendError> {
        let conds = extract_conditions(condition_string)
            .map_err(|e| BackendError::PromptUnparseable(e.to_string()))?;
        let items = self.pseudo_items(texts, level);
        let presented = Ordering::from_items(&items);
        let gold = gold_ranking(&items, &presented, &conds)
            .map_err(|e| BackendError::PromptUnparseable(e.to_string()))?;
        let index_of: BTreeMap<&str, usize> = items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.id.as_str(), i))
            .collect();
        Ok(gold.ids().iter().map(|id| index_of[id.as_str()]).collect())
    }

    /// Maybe swap one adjacent pair, drawing from the per-prompt stream.
    /// The uniform draw happens before the epsilon comparison, so for a fixed
    /// prompt a larger epsilon strictly widens the set of swapped answers.
    fn apply_noise(&self, order: &mut [usize], prompt: &str) {
        if order.len() < 2 {
            return;
        }
        let digest = Sha256::digest(prompt.as_bytes());
        let word = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let mut rng = seed::rng(self.seed, &[tag::ORACLE_NOISE, word]);
        let draw: f64 = rng.random();
        if draw < self.epsilon {
            let at = rng.random_range(0..order.len() - 1);
            order.swap(at, at + 1);
        }
    }

    fn answer(&self, req: &ModelRequest) -> Result<String, BackendError> {
        let prompt = &req.rendered_prompt;
        match req.prompt_kind {
            PromptKind::ExtractConditions => {
                let conds = section_after(prompt, LIST_ANCHOR)?;
                let parts: Vec<&str> = conds.split(CONDITION_SEPARATOR).collect();
                Ok(parts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{}. {}", i + 1, c))
                    .collect::<Vec<_>>()
                    .join("\n"))
            }
            PromptKind::SortConditions => {
                let block = section_after(prompt, LIST_ANCHOR)?;
                let lines = crate::backend::parsers::parse_condition_list(block)
                    .map_err(|e| BackendError::PromptUnparseable(e.to_string()))?;
                let mut parsed = Vec::with_capacity(lines.len());
                for line in &lines {
                    let cond = parse_condition(line)
                        .map_err(|e| BackendError::PromptUnparseable(e.to_string()))?;
                    parsed.push((cond.priority, line.clone()));
                }
                // Stable ascending by priority, surfaces kept verbatim.
                parsed.sort_by_key(|(p, _)| *p);
                Ok(parsed
                    .iter()
                    .enumerate()
                    .map(|(i, (_, line))| format!("{}. {}", i + 1, line))
                    .collect::<Vec<_>>()
                    .join("\n"))
            }
            PromptKind::RankTokenLevel | PromptKind::RankTokenCot => {
                let conds = between(prompt, CONDITIONS_ANCHOR, CONDITIONS_END)?;
                let list = between(prompt, TOKEN_ITEMS_ANCHOR, TOKEN_ITEMS_END)?;
                let texts: Vec<String> = list
                    .split("\", \"")
                    .map(|t| t.trim_matches('"').to_string())
                    .collect();
                if texts.iter().any(|t| t.is_empty()) {
                    return Err(BackendError::PromptUnparseable("empty item text".into()));
                }
                let mut order = self.rank(&conds, &texts, ItemLevel::Token)?;
                self.apply_noise(&mut order, prompt);
                Ok(order
                    .iter()
                    .map(|&i| format!("\"{}\"", texts[i]))
                    .collect::<Vec<_>>()
                    .join(", "))
            }
            PromptKind::RankParagraphLevel | PromptKind::RankParagraphCot => {
                let conds = between(prompt, CONDITIONS_ANCHOR, CONDITIONS_END)?;
                let texts: Vec<String> = ITEM_LINE
                    .captures_iter(prompt)
                    .map(|c| c[2].to_string())
                    .collect();
                if texts.is_empty() {
                    return Err(BackendError::PromptUnparseable("no Item-K lines".into()));
                }
                let mut order = self.rank(&conds, &texts, ItemLevel::Paragraph)?;
                self.apply_noise(&mut order, prompt);
                Ok(order
                    .iter()
                    .map(|&i| format!("Item-{}", i + 1))
                    .collect::<Vec<_>>()
                    .join("\n"))
            }
        }
    }
}

fn section_after<'a>(prompt: &'a str, anchor: &str) -> Result<&'a str, BackendError> {
    prompt
        .find(anchor)
        .map(|at| &prompt[at + anchor.len()..])
        .ok_or_else(|| BackendError::PromptUnparseable(format!("missing anchor {:?}", anchor)))
}

/// Text between two anchors; the end anchor is searched from the right so
/// quoted condition strings may themselves contain quotes.
fn between(prompt: &str, start: &str, end: &str) -> Result<String, BackendError> {
    let from = prompt
        .find(start)
        .map(|at| at + start.len())
        .ok_or_else(|| BackendError::PromptUnparseable(format!("missing anchor {:?}", start)))?;
    let rest = &prompt[from..];
    let to = rest
        .rfind(end)
        .ok_or_else(|| BackendError::PromptUnparseable(format!("missing anchor {:?}", end)))?;
    Ok(rest[..to].to_string())
}

impl ChatModel for OracleModel {
    fn complete(&self, req: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let text = self.answer(req)?;
        let usage = Usage {
            prompt_tokens: req.rendered_prompt.split_whitespace().count() as u64,
            completion_tokens: text.split_whitespace().count() as u64,
        };
        Ok(ModelResponse {
            text,
            usage: Some(usage),
            cached: false,
            latency_ms: 0,
        })
    }
}
