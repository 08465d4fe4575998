//! Benchmark synthesis: 18 scenarios (2 item levels × 1–3 conditions ×
//! 3/5/7 items), five condition categories per scenario, fixed priority
//! assignment, seeded condition-order randomization, and candidate filtering.
//!
//! Priorities are assigned by role: the category condition is medium, the
//! character-count extra condition is low, the extra positional condition is
//! high. Two-condition samples add one of the extras by seeded coin flip;
//! three-condition samples add both.

mod synth;

pub use synth::synth_pool;

use crate::condition::templates::{category_template_ids, template_shape, Shape};
use crate::condition::SlotValueKind;
use crate::condition::{
    join_condition_string, parse_condition, Condition, ConditionCategory, Directive, KeyKind,
    Priority,
};
use crate::engine::{
    char_count, gold_ranking, Item, ItemLevel, Ordering, {self},
};
use crate::scalar::DateValue;
use crate::scalar::Scalar;
use crate::seed::{self, tag};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use thiserror::Error;

/// One cell of the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub level: ItemLevel,
    pub n_conditions: u8,
    pub n_items: u8,
}

impl Scenario {
    pub fn new(level: ItemLevel, n_conditions: u8, n_items: u8) -> Self {
        Scenario {
            level,
            n_conditions,
            n_items,
        }
    }

    /// All 18 scenarios in canonical order (level, conditions, items).
    pub fn all() -> Vec<Scenario> {
        let mut out = Vec::with_capacity(18);
        for level in [ItemLevel::Token, ItemLevel::Paragraph] {
            for n_conditions in [1u8, 2, 3] {
                for n_items in [3u8, 5, 7] {
                    out.push(Scenario {
                        level,
                        n_conditions,
                        n_items,
                    });
                }
            }
        }
        out
    }

    /// Position in the canonical ordering; feeds the seeding scheme.
    pub fn index(&self) -> u64 {
        let level = match self.level {
            ItemLevel::Token => 0u64,
            ItemLevel::Paragraph => 1,
        };
        let conds = (self.n_conditions - 1) as u64;
        let items = match self.n_items {
            3 => 0u64,
            5 => 1,
            _ => 2,
        };
        level * 9 + conds * 3 + items
    }

    pub fn label(&self) -> String {
        format!(
            "{}-{}c-{}i",
            self.level.name(),
            self.n_conditions,
            self.n_items
        )
    }
}

/// Attribute value kinds a pool schema declares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Text,
    Number,
    Date,
}

fn kind_of(value: &Scalar) -> AttrKind {
    match value {
        Scalar::Text(_) => AttrKind::Text,
        Scalar::Number(_) => AttrKind::Number,
        Scalar::Date(_) => AttrKind::Date,
    }
}

/// A labeled item pool for one item level.
#[derive(Debug, Clone)]
pub struct ItemPool {
    pub level: ItemLevel,
    pub attribute_schema: BTreeMap<String, AttrKind>,
    pub entries: Vec<Item>,
}

impl ItemPool {
    /// Build a pool from entries, deriving the attribute schema and checking
    /// conformance: consistent kinds per attribute, unique ids, unique
    /// non-empty texts, and matching levels.
    pub fn from_entries(level: ItemLevel, entries: Vec<Item>) -> Result<ItemPool, GenError> {
        let mut schema: BTreeMap<String, AttrKind> = BTreeMap::new();
        let mut ids = HashSet::new();
        let mut texts = HashSet::new();
        for item in &entries {
            if item.level != level {
                return Err(GenError::SchemaViolation(format!(
                    "item {} has level {:?}, pool is {:?}",
                    item.id, item.level, level
                )));
            }
            if item.text.trim().is_empty() {
                return Err(GenError::SchemaViolation(format!(
                    "item {} has empty text",
                    item.id
                )));
            }
            if !ids.insert(item.id.clone()) {
                return Err(GenError::SchemaViolation(format!(
                    "duplicate item id {}",
                    item.id
                )));
            }
            if !texts.insert(item.text.clone()) {
                return Err(GenError::SchemaViolation(format!(
                    "duplicate item text {:?} ({})",
                    item.text, item.id
                )));
            }
            for (name, value) in &item.attributes {
                let kind = kind_of(value);
                match schema.get(name) {
                    None => {
                        schema.insert(name.clone(), kind);
                    }
                    Some(k) if *k == kind => {}
                    Some(k) => {
                        return Err(GenError::SchemaViolation(format!(
                            "attribute {:?} is {:?} on item {} but {:?} elsewhere",
                            name, kind, item.id, k
                        )));
                    }
                }
            }
        }
        Ok(ItemPool {
            level,
            attribute_schema: schema,
            entries,
        })
    }
}

/// One benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRecord", into = "SampleRecord")]
pub struct Sample {
    pub id: String,
    pub scenario: Scenario,
    /// Category of the medium (category) condition.
    pub category: ConditionCategory,
    /// Conditions in the surface order shown to the model.
    pub conditions_presented: Vec<Condition>,
    pub condition_string: String,
    /// Items in presented (shuffled) order.
    pub items_presented: Vec<Item>,
    pub gold: Ordering,
    pub seed_trace: u64,
}

impl Sample {
    pub fn presented_order(&self) -> Ordering {
        Ordering::from_items(&self.items_presented)
    }

    /// The dominating condition: highest priority, last in application order.
    pub fn highest_priority_condition(&self) -> &Condition {
        let top = self
            .conditions_presented
            .iter()
            .map(|c| c.priority)
            .max()
            .expect("non-empty");
        self.conditions_presented
            .iter()
            .rfind(|c| c.priority == top)
            .expect("non-empty")
    }

    /// Fold of all conditions strictly below the highest priority over the
    /// presented order; the reference for checking the highest condition.
    pub fn lower_priority_reference(&self) -> Result<Ordering, engine::EngineError> {
        let top = self.highest_priority_condition().priority;
        let lower: Vec<Condition> = self
            .conditions_presented
            .iter()
            .filter(|c| c.priority < top)
            .cloned()
            .collect();
        gold_ranking(&self.items_presented, &self.presented_order(), &lower)
    }
}

/// Wire form of a sample (JSON Lines, one per line).
#[derive(Serialize, Deserialize, Clone)]
struct SampleRecord {
    id: String,
    scenario: Scenario,
    category: ConditionCategory,
    conditions: Vec<ConditionRecord>,
    condition_string: String,
    items: Vec<ItemRecord>,
    gold: Vec<String>,
    seed_trace: u64,
}

#[derive(Serialize, Deserialize, Clone)]
struct ConditionRecord {
    surface: String,
    priority: Priority,
    template_id: u8,
}

#[derive(Serialize, Deserialize, Clone)]
struct ItemRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, Scalar>,
}

impl From<Sample> for SampleRecord {
    fn from(s: Sample) -> Self {
        SampleRecord {
            id: s.id,
            scenario: s.scenario,
            category: s.category,
            conditions: s
                .conditions_presented
                .iter()
                .map(|c| ConditionRecord {
                    surface: c.surface.clone(),
                    priority: c.priority,
                    template_id: c.template_id,
                })
                .collect(),
            condition_string: s.condition_string,
            items: s
                .items_presented
                .iter()
                .map(|i| ItemRecord {
                    id: i.id.clone(),
                    text: i.text.clone(),
                    attributes: i.attributes.clone(),
                })
                .collect(),
            gold: s.gold.ids().to_vec(),
            seed_trace: s.seed_trace,
        }
    }
}

impl TryFrom<SampleRecord> for Sample {
    type Error = String;

    fn try_from(r: SampleRecord) -> Result<Self, String> {
        let mut conditions = Vec::with_capacity(r.conditions.len());
        for c in &r.conditions {
            let mut parsed =
                parse_condition(&c.surface).map_err(|e| format!("sample {}: {}", r.id, e))?;
            parsed.priority = c.priority;
            if parsed.template_id != c.template_id {
                return Err(format!(
                    "sample {}: surface parses as template {} but record says {}",
                    r.id, parsed.template_id, c.template_id
                ));
            }
            conditions.push(parsed);
        }
        let items: Vec<Item> = r
            .items
            .into_iter()
            .map(|i| Item {
                id: i.id,
                text: i.text,
                level: r.scenario.level,
                attributes: i.attributes,
                positional_ok: false,
            })
            .collect();
        Ok(Sample {
            id: r.id,
            scenario: r.scenario,
            category: r.category,
            conditions_presented: conditions,
            condition_string: r.condition_string,
            items_presented: items,
            gold: Ordering::new(r.gold),
            seed_trace: r.seed_trace,
        })
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("pool level {pool:?} does not match scenario level {scenario:?}")]
    PoolLevelMismatch {
        pool: ItemLevel,
        scenario: ItemLevel,
    },
    #[error("pool exhausted for {category:?}: need {needed} items, have {available}")]
    PoolExhausted {
        category: ConditionCategory,
        needed: usize,
        available: usize,
    },
    #[error("no slot value can produce a non-trivial partition for {category:?}")]
    UnsatisfiableSlot { category: ConditionCategory },
    #[error("pool schema violation: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
}

/// Attribute names accepted as the `[Y]` slot of the locational templates.
const LOCATIONAL_SLOT_ATTRS: &[&str] = &[
    "birth place",
    "death place",
    "country of citizenship",
    "headquarter location",
    "location",
];

/// Fixed-attribute templates own these; slot-named numeric attributes are
/// drawn from the rest of the schema.
const RESERVED_NUMERIC_ATTRS: &[&str] = &["size", "height"];

struct UsableTemplate {
    id: u8,
    /// Candidate attribute names for templates whose slot names an attribute.
    slot_attrs: Vec<String>,
}

fn entries_with_attr<'p>(pool: &'p ItemPool, attr: &str) -> Vec<&'p Item> {
    pool.entries
        .iter()
        .filter(|e| e.attributes.contains_key(attr))
        .collect()
}

fn distinct_values(pool: &ItemPool, attr: &str) -> usize {
    pool.entries
        .iter()
        .filter_map(|e| e.attributes.get(attr))
        .map(|v| v.render())
        .collect::<BTreeSet<_>>()
        .len()
}

fn usable_templates(
    pool: &ItemPool,
    category: ConditionCategory,
    n_items: usize,
) -> Result<Vec<UsableTemplate>, GenError> {
    if category == ConditionCategory::Positional {
        let available = pool.entries.iter().filter(|e| e.positional_ok).count();
        if available < n_items {
            return Err(GenError::PoolExhausted {
                category,
                needed: n_items,
                available,
            });
        }
        return Ok(category_template_ids(category)
            .into_iter()
            .map(|id| UsableTemplate {
                id,
                slot_attrs: Vec::new(),
            })
            .collect());
    }

    let numeric_slot_attrs: Vec<String> = pool
        .attribute_schema
        .iter()
        .filter(|(name, kind)| {
            **kind == AttrKind::Number
                && !RESERVED_NUMERIC_ATTRS.contains(&name.as_str())
                && entries_with_attr(pool, name).len() >= n_items
                && distinct_values(pool, name) >= 2
        })
        .map(|(name, _)| name.clone())
        .collect();

    let locational_slot_attrs: Vec<String> = LOCATIONAL_SLOT_ATTRS
        .iter()
        .filter(|name| {
            pool.attribute_schema.contains_key(**name)
                && entries_with_attr(pool, name).len() >= n_items
                && distinct_values(pool, name) >= 2
        })
        .map(|s| s.to_string())
        .collect();

    let mut usable = Vec::new();
    let mut saw_enough_entries = false;
    for id in category_template_ids(category) {
        let shape = template_shape(id).expect("known template");
        let candidate = match shape {
            Shape::SortAttr(attr, _) => {
                let n = entries_with_attr(pool, attr).len();
                saw_enough_entries |= n >= n_items;
                (n >= n_items).then(|| UsableTemplate {
                    id,
                    slot_attrs: Vec::new(),
                })
            }
            Shape::PartEq(attr, _) | Shape::PartCmp(attr, _, _, _) => {
                let n = entries_with_attr(pool, attr).len();
                saw_enough_entries |= n >= n_items;
                (n >= n_items && distinct_values(pool, attr) >= 2).then(|| UsableTemplate {
                    id,
                    slot_attrs: Vec::new(),
                })
            }
            Shape::PartEqSlotAttr(_) => {
                saw_enough_entries |= !locational_slot_attrs.is_empty();
                (!locational_slot_attrs.is_empty()).then(|| UsableTemplate {
                    id,
                    slot_attrs: locational_slot_attrs.clone(),
                })
            }
            Shape::SortSlotAttr | Shape::PartExtreme(_, _) => {
                saw_enough_entries |= !numeric_slot_attrs.is_empty();
                (!numeric_slot_attrs.is_empty()).then(|| UsableTemplate {
                    id,
                    slot_attrs: numeric_slot_attrs.clone(),
                })
            }
            Shape::SortCharCount
            | Shape::MoveByText(_)
            | Shape::MoveFirst(_)
            | Shape::MoveLast(_) => None,
        };
        if let Some(u) = candidate {
            usable.push(u);
        }
    }

    if usable.is_empty() {
        if saw_enough_entries {
            Err(GenError::UnsatisfiableSlot { category })
        } else {
            Err(GenError::PoolExhausted {
                category,
                needed: n_items,
                available: 0,
            })
        }
    } else {
        Ok(usable)
    }
}

/// Generate candidate samples for every category of one scenario, keeping
/// those that pass [`filter_sample`]. Candidate construction is fully
/// determined by `(seed, scenario, category, candidate index)`.
pub fn generate_scenario(
    pool: &ItemPool,
    scenario: Scenario,
    per_category: u32,
    seed: u64,
) -> Result<Vec<Sample>, GenError> {
    if pool.level != scenario.level {
        return Err(GenError::PoolLevelMismatch {
            pool: pool.level,
            scenario: scenario.level,
        });
    }
    let mut out = Vec::new();
    for (cat_idx, category) in ConditionCategory::DRAWABLE.iter().enumerate() {
        let usable = usable_templates(pool, *category, scenario.n_items as usize)?;
        for k in 0..per_category {
            let candidate_seed = seed::derive(
                seed,
                &[tag::CANDIDATE, scenario.index(), cat_idx as u64, k as u64],
            );
            if let Some(sample) =
                build_candidate(pool, scenario, *category, &usable, candidate_seed, k)
            {
                if filter_sample(&sample) {
                    out.push(sample);
                }
            }
        }
    }
    Ok(out)
}

fn draw_without_replacement<'p>(
    eligible: &[&'p Item],
    n: usize,
    rng: &mut impl Rng,
) -> Vec<&'p Item> {
    let mut indices: Vec<usize> = (0..eligible.len()).collect();
    indices.shuffle(rng);
    indices.truncate(n);
    indices.into_iter().map(|i| eligible[i]).collect()
}

/// Try pivot values drawn from the items themselves until the predicate
/// splits them non-trivially; partitions referencing no or all items carry
/// no signal.
fn pick_partition_value(
    drawn: &[&Item],
    attr: &str,
    matches: impl Fn(&str, &Item) -> bool,
    rng: &mut impl Rng,
) -> Option<String> {
    let start = rng.random_range(0..drawn.len());
    for offset in 0..drawn.len() {
        let pivot = drawn[(start + offset) % drawn.len()];
        let value = pivot.attributes.get(attr)?.render();
        let hits = drawn.iter().filter(|i| matches(&value, i)).count();
        if hits > 0 && hits < drawn.len() {
            return Some(value);
        }
    }
    None
}

fn build_category_condition(
    drawn: &[&Item],
    template: &UsableTemplate,
    rng: &mut impl Rng,
) -> Option<Condition> {
    let shape = template_shape(template.id).expect("known template");
    let slot_attr = (!template.slot_attrs.is_empty())
        .then(|| template.slot_attrs[rng.random_range(0..template.slot_attrs.len())].clone());

    let (x, y): (Option<String>, Option<String>) = match shape {
        Shape::MoveByText(_) => {
            let pick = drawn[rng.random_range(0..drawn.len())];
            (Some(pick.text.clone()), None)
        }
        Shape::MoveFirst(_) | Shape::MoveLast(_) | Shape::SortAttr(_, _) | Shape::SortCharCount => {
            (None, None)
        }
        Shape::SortSlotAttr => (slot_attr, None),
        Shape::PartEq(attr, _) => {
            let value = pick_partition_value(
                drawn,
                attr,
                |v, item| {
                    item.attributes
                        .get(attr)
                        .map(|a| a.render() == v)
                        .unwrap_or(false)
                },
                rng,
            )?;
            (Some(value), None)
        }
        Shape::PartEqSlotAttr(_) => {
            let attr = slot_attr?;
            let value = pick_partition_value(
                drawn,
                &attr,
                |v, item| {
                    item.attributes
                        .get(&attr)
                        .map(|a| a.render() == v)
                        .unwrap_or(false)
                },
                rng,
            )?;
            (Some(value), Some(attr))
        }
        Shape::PartCmp(attr, op, _, value_kind) => {
            let is_less = op == crate::condition::PredicateOp::Lt;
            let value = pick_partition_value(
                drawn,
                attr,
                |v, item| match value_kind {
                    SlotValueKind::Date => {
                        match (
                            item.attributes.get(attr).and_then(|a| a.as_date()),
                            DateValue::parse(v),
                        ) {
                            (Some(have), Some(pivot)) => {
                                if is_less {
                                    have < pivot
                                } else {
                                    have > pivot
                                }
                            }
                            _ => false,
                        }
                    }
                    _ => {
                        match (
                            item.attributes.get(attr).and_then(|a| a.as_number()),
                            crate::scalar::leading_decimal(v),
                        ) {
                            (Some(have), Some(pivot)) => {
                                if is_less {
                                    have < pivot
                                } else {
                                    have > pivot
                                }
                            }
                            _ => false,
                        }
                    }
                },
                rng,
            )?;
            (Some(value), None)
        }
        Shape::PartExtreme(_, _) => {
            let attr = slot_attr?;
            // Degenerate when every drawn item holds the same value.
            let values: BTreeSet<String> = drawn
                .iter()
                .filter_map(|i| i.attributes.get(&attr))
                .map(|v| v.render())
                .collect();
            if values.len() < 2 {
                return None;
            }
            (Some(attr), None)
        }
    };
    Condition::from_template(template.id, x.as_deref(), y.as_deref(), Priority::Medium).ok()
}

fn build_extra_positional(drawn: &[&Item], rng: &mut impl Rng) -> Option<Condition> {
    let ids = category_template_ids(ConditionCategory::Positional);
    let id = ids[rng.random_range(0..ids.len())];
    let x = match template_shape(id) {
        Some(Shape::MoveByText(_)) => Some(drawn[rng.random_range(0..drawn.len())].text.clone()),
        _ => None,
    };
    Condition::from_template(id, x.as_deref(), None, Priority::High).ok()
}

fn build_candidate(
    pool: &ItemPool,
    scenario: Scenario,
    category: ConditionCategory,
    usable: &[UsableTemplate],
    candidate_seed: u64,
    k: u32,
) -> Option<Sample> {
    let mut rng = seed::rng(candidate_seed, &[]);
    let template = &usable[rng.random_range(0..usable.len())];

    let eligible: Vec<&Item> = if category == ConditionCategory::Positional {
        pool.entries.iter().filter(|e| e.positional_ok).collect()
    } else {
        // Entries must carry every attribute the chosen template reads.
        match template_shape(template.id).expect("known template") {
            Shape::SortAttr(attr, _) | Shape::PartEq(attr, _) | Shape::PartCmp(attr, _, _, _) => {
                entries_with_attr(pool, attr)
            }
            Shape::SortSlotAttr | Shape::PartExtreme(_, _) | Shape::PartEqSlotAttr(_) => {
                // Attribute picked below from slot_attrs; require all of them
                // so the pick stays free.
                pool.entries
                    .iter()
                    .filter(|e| {
                        template
                            .slot_attrs
                            .iter()
                            .all(|a| e.attributes.contains_key(a))
                    })
                    .collect()
            }
            _ => pool.entries.iter().collect(),
        }
    };
    if eligible.len() < scenario.n_items as usize {
        return None;
    }

    let drawn = draw_without_replacement(&eligible, scenario.n_items as usize, &mut rng);
    let medium = build_category_condition(&drawn, template, &mut rng)?;

    let mut items: Vec<Item> = drawn.iter().map(|i| (*i).clone()).collect();
    items.shuffle(&mut rng);

    let mut conditions = Vec::with_capacity(scenario.n_conditions as usize);
    match scenario.n_conditions {
        1 => conditions.push(medium),
        2 => {
            if rng.random_bool(0.5) {
                let low = Condition::from_template(31, None, None, Priority::Low).ok()?;
                conditions.push(low);
                conditions.push(medium);
            } else {
                let refs: Vec<&Item> = items.iter().collect();
                let high = build_extra_positional(&refs, &mut rng)?;
                conditions.push(medium);
                conditions.push(high);
            }
        }
        _ => {
            let low = Condition::from_template(31, None, None, Priority::Low).ok()?;
            let refs: Vec<&Item> = items.iter().collect();
            let high = build_extra_positional(&refs, &mut rng)?;
            conditions.push(low);
            conditions.push(medium);
            conditions.push(high);
        }
    }
    conditions.shuffle(&mut rng);

    let condition_string = join_condition_string(&conditions);
    let presented = Ordering::from_items(&items);
    let gold = gold_ranking(&items, &presented, &conditions).ok()?;

    Some(Sample {
        id: format!("{}-{}-{:04}", scenario.label(), category.name(), k),
        scenario,
        category,
        conditions_presented: conditions,
        condition_string,
        items_presented: items,
        gold,
        seed_trace: candidate_seed,
    })
}

/// Candidate acceptance filter.
///
/// Rejects (a) duplicate character counts when a char-count condition is
/// present, (b) tied keys under any full-sort condition, (c) degenerate
/// partitions matching no or all items, and (d) — for char-count samples
/// with two or more conditions — gold rankings that change under 20 seeded
/// reshuffles of the presented order (uniqueness proxy).
pub fn filter_sample(sample: &Sample) -> bool {
    let items = &sample.items_presented;
    let has_charcount = sample
        .conditions_presented
        .iter()
        .any(|c| c.category == ConditionCategory::CharCount);

    if has_charcount {
        let mut counts: Vec<usize> = items.iter().map(|i| char_count(&i.text)).collect();
        counts.sort_unstable();
        if counts.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
    }

    for cond in &sample.conditions_presented {
        match &cond.directive {
            Directive::SortByKey {
                attribute,
                key_kind,
                ..
            } => {
                // Char counts are covered by the duplicate-count rule above.
                if *key_kind == KeyKind::TextLength {
                    continue;
                }
                match engine::has_distinct_keys(items, attribute, *key_kind) {
                    Ok(true) => {}
                    _ => return false,
                }
            }
            Directive::PartitionMove { predicate, .. } => {
                match engine::partition_match_count(items, predicate) {
                    Ok(n) if n > 0 && n < items.len() => {}
                    _ => return false,
                }
            }
            Directive::PositionalMove { .. } => {}
        }
    }

    if has_charcount && sample.conditions_presented.len() >= 2 {
        let mut ids = sample.presented_order().into_ids();
        for t in 0..20u64 {
            let mut rng = seed::rng(sample.seed_trace, &[tag::RESHUFFLE, t]);
            ids.shuffle(&mut rng);
            match gold_ranking(
                items,
                &Ordering::new(ids.clone()),
                &sample.conditions_presented,
            ) {
                Ok(gold) if gold == sample.gold => {}
                _ => return false,
            }
        }
    }

    true
}

/// Average sample counts per (level, condition count), averaged across the
/// item-count scenarios observed in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    /// (level, n_conditions) → (average count, per-item-count counts).
    pub rows: BTreeMap<(ItemLevel, u8), (f64, BTreeMap<u8, usize>)>,
}

pub fn dataset_stats(samples: &[Sample]) -> DatasetStats {
    let mut counts: BTreeMap<(ItemLevel, u8), BTreeMap<u8, usize>> = BTreeMap::new();
    let mut item_axis: BTreeSet<u8> = BTreeSet::new();
    for s in samples {
        item_axis.insert(s.scenario.n_items);
        *counts
            .entry((s.scenario.level, s.scenario.n_conditions))
            .or_default()
            .entry(s.scenario.n_items)
            .or_default() += 1;
    }
    let denom = item_axis.len().max(1) as f64;
    let rows = counts
        .into_iter()
        .map(|(key, per_items)| {
            let total: usize = per_items.values().sum();
            (key, (total as f64 / denom, per_items))
        })
        .collect();
    DatasetStats { rows }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conds: BTreeSet<u8> = self.rows.keys().map(|(_, c)| *c).collect();
        write!(f, "{:<10}", "")?;
        for c in &conds {
            write!(f, "{:>14}", format!("{} cond.", c))?;
        }
        writeln!(f)?;
        for level in [ItemLevel::Token, ItemLevel::Paragraph] {
            let has_level = self.rows.keys().any(|(l, _)| *l == level);
            if !has_level {
                continue;
            }
            let label = match level {
                ItemLevel::Token => "T-level",
                ItemLevel::Paragraph => "P-level",
            };
            write!(f, "{:<10}", label)?;
            for c in &conds {
                match self.rows.get(&(level, *c)) {
                    Some((avg, _)) => write!(f, "{:>14.1}", avg)?,
                    None => write!(f, "{:>14}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
