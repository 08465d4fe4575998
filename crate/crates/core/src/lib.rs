//! Multi-conditional ranking (MCR) toolkit.
//!
//! Everything needed to run the MCR task end-to-end:
//!
//! - [`condition`] — the condition DSL: 36 English templates with structured,
//!   deterministic semantics (stable sorts, stable partitions, positional moves).
//! - [`engine`] — the rule engine that applies conditions to item orderings,
//!   computes gold rankings, and checks condition satisfaction.
//! - [`gen`] — a seeded benchmark generator producing ranking datasets
//!   across 18 scenarios (2 item levels × 1–3 conditions × 3/5/7 items).
//! - [`backend`] — model backends: an OpenAI-compatible HTTP chat client with
//!   disk cache and retry, and a deterministic rule-based oracle for offline runs.
//! - [`pipeline`] — ranking strategies over a backend: Base, zero-shot CoT,
//!   and EXSIR (extract → sort → iteratively rank).
//! - [`metrics`] — exact-match / averaged accuracy, high-priority satisfaction,
//!   decomposition accuracy, and report emission (CSV / Markdown).

pub mod backend;
pub mod condition;
pub mod engine;
pub mod gen;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod seed;

pub use condition::{
    extract_conditions, join_condition_string, parse_condition, render_condition, sort_by_priority,
    Condition, ConditionCategory, ConditionError, Directive, KeyKind, Placement, Predicate,
    PredicateOp, Priority, Selector, SortOrder,
};
pub use engine::{
    apply_condition, brute_force_gold, char_count, gold_ranking, satisfies, EngineError, Item,
    ItemLevel, Ordering,
};
pub use gen::{
    dataset_stats, filter_sample, generate_scenario, synth_pool, DatasetStats, GenError, ItemPool,
    Sample, Scenario,
};
pub use scalar::{DateValue, Scalar};
