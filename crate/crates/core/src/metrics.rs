//! Scoring and aggregation: exact-match and averaged accuracy, high-priority
//! satisfaction, decomposition accuracy, and CSV/Markdown report emission.
//!
//! Exact match scores 1 only for a fully correct ranking; averaged accuracy
//! is the fraction of items placed at their gold position. Invalid model
//! output scores zero on both.

use crate::condition::{render_condition, sort_by_priority, ConditionCategory};
use crate::engine::{satisfies, Ordering};
use crate::gen::Sample;
use crate::pipeline::{RankingRun, Strategy};
use crate::ItemLevel;
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("run {run} does not match sample {sample}: {reason}")]
    GoldMismatch {
        run: String,
        sample: String,
        reason: String,
    },
}

/// Per-sample scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub strategy: Strategy,
    pub exact: u8,
    pub averaged: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub high_priority_satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition_correct: Option<bool>,
}

static PRIORITY_TAG: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\((?:low|medium|high) priority\):\s*").unwrap());
static WHITESPACE_RUN: Lazy<Regex> = Lazy::new(|| Regex::new(r"\s+").unwrap());

/// Normalize one condition line for decomposition comparison: enumeration
/// markers and priority tags stripped, whitespace collapsed.
fn normalize_condition_line(line: &str) -> String {
    let s = crate::backend::parsers::strip_enumeration(line.trim());
    let s = PRIORITY_TAG.replace(s.trim(), "");
    WHITESPACE_RUN.replace_all(s.trim(), " ").to_string()
}

/// Score one run against its sample.
pub fn score_sample(run: &RankingRun, sample: &Sample) -> Result<SampleScore, EvalError> {
    if run.sample_id != sample.id {
        return Err(EvalError::GoldMismatch {
            run: run.sample_id.clone(),
            sample: sample.id.clone(),
            reason: "sample ids differ".into(),
        });
    }

    let gold = sample.gold.ids();
    let n = gold.len();
    let (exact, averaged, predicted) = match &run.predicted {
        None => (0u8, 0.0, None),
        Some(ids) => {
            let ordering = Ordering::new(ids.clone());
            if !ordering.is_permutation_of(&sample.items_presented) {
                return Err(EvalError::GoldMismatch {
                    run: run.sample_id.clone(),
                    sample: sample.id.clone(),
                    reason: "predicted ids are not a permutation of the sample's items".into(),
                });
            }
            let hits = ids.iter().zip(gold).filter(|(a, b)| a == b).count();
            ((hits == n) as u8, hits as f64 / n as f64, Some(ordering))
        }
    };

    // Satisfaction of the dominating condition, checked against the fold of
    // all lower-priority conditions (the presented order when none exist).
    let high_priority_satisfied = match &predicted {
        None => Some(false),
        Some(ordering) => {
            let highest = sample.highest_priority_condition();
            let reference =
                sample
                    .lower_priority_reference()
                    .map_err(|e| EvalError::GoldMismatch {
                        run: run.sample_id.clone(),
                        sample: sample.id.clone(),
                        reason: format!("cannot build reference order: {}", e),
                    })?;
            let ok = satisfies(ordering, &sample.items_presented, highest, Some(&reference))
                .map_err(|e| EvalError::GoldMismatch {
                    run: run.sample_id.clone(),
                    sample: sample.id.clone(),
                    reason: format!("cannot check satisfaction: {}", e),
                })?;
            Some(ok)
        }
    };

    // Decomposition accuracy (EXSIR only): the sorted stage must reproduce
    // the gold surfaces in ascending-priority order.
    let decomposition_correct = match run.strategy {
        Strategy::Exsir => {
            let expected: Vec<String> = sort_by_priority(&sample.conditions_presented)
                .iter()
                .map(|c| normalize_condition_line(&render_condition(c, false)))
                .collect();
            let got: Option<Vec<String>> = run.decomposition.as_ref().map(|d| {
                d.sorted
                    .iter()
                    .map(|l| normalize_condition_line(l))
                    .collect()
            });
            Some(got.map(|g| g == expected).unwrap_or(false))
        }
        _ => None,
    };

    Ok(SampleScore {
        sample_id: sample.id.clone(),
        strategy: run.strategy,
        exact,
        averaged,
        high_priority_satisfied,
        decomposition_correct,
    })
}

/// Aggregation key; `category: None` is the "All" row of its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub level: ItemLevel,
    pub n_conditions: u8,
    pub n_items: u8,
    pub strategy: Strategy,
    pub category: Option<ConditionCategory>,
}

/// Aggregated percentages for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub n: usize,
    pub accuracy_pct: f64,
    pub avg_accuracy_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub high_priority_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub groups: BTreeMap<GroupKey, GroupCell>,
}

#[derive(Default)]
struct Accumulator {
    n: usize,
    exact: usize,
    averaged: f64,
    high_n: usize,
    high_hits: usize,
    deco_n: usize,
    deco_hits: usize,
}

impl Accumulator {
    fn push(&mut self, score: &SampleScore) {
        self.n += 1;
        self.exact += score.exact as usize;
        self.averaged += score.averaged;
        if let Some(h) = score.high_priority_satisfied {
            self.high_n += 1;
            self.high_hits += h as usize;
        }
        if let Some(d) = score.decomposition_correct {
            self.deco_n += 1;
            self.deco_hits += d as usize;
        }
    }

    fn cell(&self, report_decomposition: bool) -> GroupCell {
        let pct = |hits: usize, n: usize| 100.0 * hits as f64 / n as f64;
        GroupCell {
            n: self.n,
            accuracy_pct: pct(self.exact, self.n),
            avg_accuracy_pct: 100.0 * self.averaged / self.n as f64,
            high_priority_pct: (self.high_n > 0).then(|| pct(self.high_hits, self.high_n)),
            decomposition_pct: (report_decomposition && self.deco_n > 0)
                .then(|| pct(self.deco_hits, self.deco_n)),
        }
    }
}

/// Row granularity of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// Per-category rows plus an "All" row per (level, conditions, items).
    #[default]
    Category,
    /// "All" rows only, one per (level, conditions, items).
    Scenario,
}

impl FromStr for GroupBy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "category" => Ok(GroupBy::Category),
            "scenario" => Ok(GroupBy::Scenario),
            other => Err(format!(
                "unknown grouping {:?} (expected category|scenario)",
                other
            )),
        }
    }
}

/// Group scores into rows per (level, conditions, items, strategy) block.
/// Decomposition percentages are reported for 2- and 3-condition groups only.
pub fn aggregate(
    scores: &[SampleScore],
    samples: &BTreeMap<String, &Sample>,
    group_by: GroupBy,
) -> Result<MetricsReport, EvalError> {
    let mut acc: BTreeMap<GroupKey, Accumulator> = BTreeMap::new();
    for score in scores {
        let sample = samples
            .get(&score.sample_id)
            .ok_or_else(|| EvalError::GoldMismatch {
                run: score.sample_id.clone(),
                sample: "<none>".into(),
                reason: "score joins to no sample".into(),
            })?;
        let base = GroupKey {
            level: sample.scenario.level,
            n_conditions: sample.scenario.n_conditions,
            n_items: sample.scenario.n_items,
            strategy: score.strategy,
            category: Some(sample.category),
        };
        if group_by == GroupBy::Category {
            acc.entry(base).or_default().push(score);
        }
        acc.entry(GroupKey {
            category: None,
            ..base
        })
        .or_default()
        .push(score);
    }
    let groups = acc
        .into_iter()
        .map(|(key, a)| {
            let report_decomposition = key.n_conditions >= 2;
            (key, a.cell(report_decomposition))
        })
        .collect();
    Ok(MetricsReport { groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Deterministic report rendering.
pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{:.1}", x)).unwrap_or_default()
}

fn category_label(category: Option<ConditionCategory>) -> &'static str {
    match category {
        None => "All",
        Some(ConditionCategory::Positional) => "Positional",
        Some(ConditionCategory::Locational) => "Locational",
        Some(ConditionCategory::Temporal) => "Temporal",
        Some(ConditionCategory::Trait) => "Trait-based",
        Some(ConditionCategory::Reason) => "Reason-based",
        Some(ConditionCategory::CharCount) => "Char-count",
    }
}

fn emit_csv(report: &MetricsReport) -> Vec<u8> {
    let mut out = String::from(
        "level,conditions,items,strategy,category,n,accuracy,avg_accuracy,high_priority,decomposition\n",
    );
    for (key, cell) in &report.groups {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.1},{:.1},{},{}\n",
            key.level.name(),
            key.n_conditions,
            key.n_items,
            key.strategy,
            category_label(key.category),
            cell.n,
            cell.accuracy_pct,
            cell.avg_accuracy_pct,
            fmt_opt(cell.high_priority_pct),
            fmt_opt(cell.decomposition_pct),
        ));
    }
    out.into_bytes()
}

/// Rows of one Markdown block: item count → category → cell.
type BlockRows<'r> = BTreeMap<u8, BTreeMap<Option<ConditionCategory>, &'r GroupCell>>;

/// Markdown mirrors the per-category breakdown tables: one block per
/// (level, conditions, strategy), rows = categories + All, columns = ACC and
/// Avg ACC per item count, then decomposition and high-priority summaries.
fn emit_markdown(report: &MetricsReport) -> Vec<u8> {
    let mut out = String::new();
    let mut blocks: BTreeMap<(ItemLevel, u8, Strategy), BlockRows> = BTreeMap::new();
    for (key, cell) in &report.groups {
        blocks
            .entry((key.level, key.n_conditions, key.strategy))
            .or_default()
            .entry(key.n_items)
            .or_default()
            .insert(key.category, cell);
    }

    let categories: [Option<ConditionCategory>; 6] = [
        Some(ConditionCategory::Positional),
        Some(ConditionCategory::Locational),
        Some(ConditionCategory::Temporal),
        Some(ConditionCategory::Trait),
        Some(ConditionCategory::Reason),
        None,
    ];

    for ((level, conds, strategy), by_items) in &blocks {
        out.push_str(&format!(
            "## {} items, {} condition{}, strategy {}\n\n",
            level.name(),
            conds,
            if *conds == 1 { "" } else { "s" },
            strategy
        ));
        let item_counts: Vec<u8> = by_items.keys().copied().collect();
        out.push_str("| Category |");
        for n in &item_counts {
            out.push_str(&format!(" {} items ACC | {} items Avg ACC |", n, n));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &item_counts {
            out.push_str("---|---|");
        }
        out.push('\n');
        for category in &categories {
            let any = by_items.values().any(|m| m.contains_key(category));
            if !any {
                continue;
            }
            out.push_str(&format!("| {} |", category_label(*category)));
            for n in &item_counts {
                match by_items[n].get(category) {
                    Some(cell) => out.push_str(&format!(
                        " {:.1} | {:.1} |",
                        cell.accuracy_pct, cell.avg_accuracy_pct
                    )),
                    None => out.push_str(" | |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');

        let deco: Vec<String> = item_counts
            .iter()
            .filter_map(|n| {
                by_items[n]
                    .get(&None)
                    .and_then(|c| c.decomposition_pct)
                    .map(|v| format!("{} items: {:.1}", n, v))
            })
            .collect();
        if !deco.is_empty() {
            out.push_str(&format!("Decomposition accuracy — {}\n\n", deco.join(", ")));
        }
        let high: Vec<String> = item_counts
            .iter()
            .filter_map(|n| {
                by_items[n]
                    .get(&None)
                    .and_then(|c| c.high_priority_pct)
                    .map(|v| format!("{} items: {:.1}", n, v))
            })
            .collect();
        if !high.is_empty() {
            out.push_str(&format!(
                "High-priority satisfaction — {}\n\n",
                high.join(", ")
            ));
        }
    }
    out.into_bytes()
}
