//! The rule engine: applies conditions to item orderings, computes gold
//! rankings by priority-ascending composition, and checks satisfaction.
//!
//! All operations are stable: items a condition does not constrain keep
//! their relative order, and equal sort keys keep input order. A gold
//! ranking is the fold of `apply_condition` over the conditions sorted
//! ascending by priority, so the highest-priority condition is applied last
//! and dominates when conditions contradict.

use crate::condition::{
    sort_by_priority, Condition, Directive, KeyKind, Placement, Predicate, PredicateOp, Priority,
    Selector, SortOrder,
};
use crate::scalar::{DateValue, Scalar};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering as CmpOrdering;
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

/// Token-level items are a few tokens; paragraph-level items run up to
/// ~150 tokens and are referred to by "Item-K" labels in prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemLevel {
    Token,
    Paragraph,
}

impl ItemLevel {
    pub fn name(self) -> &'static str {
        match self {
            ItemLevel::Token => "token",
            ItemLevel::Paragraph => "paragraph",
        }
    }
}

/// A rankable unit: text plus the labeled attributes gold orderings are
/// computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub text: String,
    pub level: ItemLevel,
    #[serde(default)]
    pub attributes: BTreeMap<String, Scalar>,
    /// Whether the item may be drawn for positional-condition samples.
    #[serde(default)]
    pub positional_ok: bool,
}

/// Number of Unicode scalar values in the trimmed text, interior spaces and
/// punctuation included.
pub fn char_count(text: &str) -> usize {
    text.trim().chars().count()
}

/// A permutation of a sample's item ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ordering(Vec<String>);

impl Ordering {
    pub fn new(ids: Vec<String>) -> Self {
        Ordering(ids)
    }

    pub fn from_items(items: &[Item]) -> Self {
        Ordering(items.iter().map(|i| i.id.clone()).collect())
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_ids(self) -> Vec<String> {
        self.0
    }

    /// True when this ordering is a permutation of the given items.
    pub fn is_permutation_of(&self, items: &[Item]) -> bool {
        if self.0.len() != items.len() {
            return false;
        }
        let mut seen: HashSet<&str> = HashSet::new();
        let known: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
        self.0
            .iter()
            .all(|id| known.contains(id.as_str()) && seen.insert(id.as_str()))
    }
}

impl From<Vec<String>> for Ordering {
    fn from(ids: Vec<String>) -> Self {
        Ordering(ids)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("item {item_id} lacks attribute {attribute:?}")]
    MissingAttribute { item_id: String, attribute: String },
    #[error("item text {0:?} matches {1} items (need exactly one)")]
    UnknownItem(String, usize),
    #[error("attribute {attribute:?} of item {item_id} is not comparable as {expected}")]
    TypeMismatch {
        item_id: String,
        attribute: String,
        expected: &'static str,
    },
    #[error("ordering is not a permutation of the item set")]
    InvalidOrdering,
    #[error("self-referential condition needs a reference ordering")]
    MissingReference,
    #[error("brute force supports at most {limit} items, got {got}")]
    TooManyItems { limit: usize, got: usize },
}

/// Keys are totally ordered per kind; NaN never appears because values come
/// from parsed literals.
#[derive(Debug, Clone, PartialEq)]
enum SortKey {
    Number(f64),
    Date(DateValue),
    Length(usize),
    Ordinal(usize),
}

impl SortKey {
    fn compare(&self, other: &SortKey) -> CmpOrdering {
        match (self, other) {
            (SortKey::Number(a), SortKey::Number(b)) => a.total_cmp(b),
            (SortKey::Date(a), SortKey::Date(b)) => a.cmp(b),
            (SortKey::Length(a), SortKey::Length(b)) => a.cmp(b),
            (SortKey::Ordinal(a), SortKey::Ordinal(b)) => a.cmp(b),
            _ => CmpOrdering::Equal, // unreachable: keys of one sort share a kind
        }
    }
}

/// Ordered vocabularies accepted by `KeyKind::OrdinalLabel`. Two values
/// compare within the first ladder containing both.
const ORDINAL_LADDERS: &[&[&str]] = &[
    &["tiny", "small", "medium", "large", "huge"],
    &["shortest", "short", "average", "tall", "tallest"],
    &["lowest", "low", "middle", "high", "highest"],
];

fn ordinal_rank(value: &str) -> Option<(usize, usize)> {
    let needle = value.trim().to_ascii_lowercase();
    for (ladder_idx, ladder) in ORDINAL_LADDERS.iter().enumerate() {
        if let Some(pos) = ladder.iter().position(|w| *w == needle) {
            return Some((ladder_idx, pos));
        }
    }
    None
}

fn sort_key(item: &Item, attribute: &str, kind: KeyKind) -> Result<SortKey, EngineError> {
    if kind == KeyKind::TextLength {
        return Ok(SortKey::Length(char_count(&item.text)));
    }
    let value = item
        .attributes
        .get(attribute)
        .ok_or_else(|| EngineError::MissingAttribute {
            item_id: item.id.clone(),
            attribute: attribute.to_string(),
        })?;
    match kind {
        KeyKind::Number => {
            value
                .as_number()
                .map(SortKey::Number)
                .ok_or_else(|| EngineError::TypeMismatch {
                    item_id: item.id.clone(),
                    attribute: attribute.to_string(),
                    expected: "number",
                })
        }
        KeyKind::Date => {
            value
                .as_date()
                .map(SortKey::Date)
                .ok_or_else(|| EngineError::TypeMismatch {
                    item_id: item.id.clone(),
                    attribute: attribute.to_string(),
                    expected: "date",
                })
        }
        KeyKind::OrdinalLabel => match value {
            Scalar::Text(s) => ordinal_rank(s)
                .map(|(ladder, pos)| SortKey::Ordinal(ladder * 100 + pos))
                .ok_or_else(|| EngineError::TypeMismatch {
                    item_id: item.id.clone(),
                    attribute: attribute.to_string(),
                    expected: "ordinal label",
                }),
            _ => Err(EngineError::TypeMismatch {
                item_id: item.id.clone(),
                attribute: attribute.to_string(),
                expected: "ordinal label",
            }),
        },
        KeyKind::TextLength => unreachable!("handled above"),
    }
}

fn predicate_matches(
    items: &HashMap<&str, &Item>,
    order: &[String],
    pred: &Predicate,
) -> Result<Vec<bool>, EngineError> {
    let attr_of = |id: &str| -> Result<&Scalar, EngineError> {
        let item = items[id];
        item.attributes
            .get(&pred.attribute)
            .ok_or_else(|| EngineError::MissingAttribute {
                item_id: item.id.clone(),
                attribute: pred.attribute.clone(),
            })
    };
    match pred.op {
        PredicateOp::Eq => {
            let needle = pred.value.as_deref().unwrap_or_default();
            order
                .iter()
                .map(|id| Ok(scalar_eq(attr_of(id)?, needle)))
                .collect()
        }
        PredicateOp::Lt | PredicateOp::Gt => {
            let needle = pred.value.as_deref().unwrap_or_default();
            let mut out = Vec::with_capacity(order.len());
            for id in order {
                let value = attr_of(id)?;
                let cmp = scalar_cmp(value, needle).ok_or_else(|| EngineError::TypeMismatch {
                    item_id: id.clone(),
                    attribute: pred.attribute.clone(),
                    expected: "number or date",
                })?;
                out.push(match pred.op {
                    PredicateOp::Lt => cmp == CmpOrdering::Less,
                    _ => cmp == CmpOrdering::Greater,
                });
            }
            Ok(out)
        }
        PredicateOp::IsMax | PredicateOp::IsMin => {
            // Extremal selection over comparable values; ties all match.
            // Values must share one kind, or the extremum is meaningless.
            let mut keys: Vec<SortKey> = Vec::with_capacity(order.len());
            for id in order {
                let value = attr_of(id)?;
                let key = extremal_key(value).ok_or_else(|| EngineError::TypeMismatch {
                    item_id: id.clone(),
                    attribute: pred.attribute.clone(),
                    expected: "number or date",
                })?;
                if let Some(first) = keys.first() {
                    if std::mem::discriminant(first) != std::mem::discriminant(&key) {
                        return Err(EngineError::TypeMismatch {
                            item_id: id.clone(),
                            attribute: pred.attribute.clone(),
                            expected: "values of one kind",
                        });
                    }
                }
                keys.push(key);
            }
            let best = keys
                .iter()
                .cloned()
                .reduce(|a, b| {
                    let keep_a = match pred.op {
                        PredicateOp::IsMax => a.compare(&b) != CmpOrdering::Less,
                        _ => a.compare(&b) != CmpOrdering::Greater,
                    };
                    if keep_a {
                        a
                    } else {
                        b
                    }
                })
                .expect("non-empty ordering");
            Ok(keys
                .iter()
                .map(|k| k.compare(&best) == CmpOrdering::Equal)
                .collect())
        }
    }
}

fn extremal_key(value: &Scalar) -> Option<SortKey> {
    value
        .as_number()
        .map(SortKey::Number)
        .or_else(|| value.as_date().map(SortKey::Date))
}

fn scalar_eq(value: &Scalar, needle: &str) -> bool {
    match value {
        Scalar::Number(n) => crate::scalar::leading_decimal(needle)
            .map(|m| m == *n)
            .unwrap_or(false),
        Scalar::Date(d) => DateValue::parse(needle)
            .map(|nd| nd.sort_key() == d.sort_key())
            .unwrap_or(false),
        Scalar::Text(s) => s == needle,
    }
}

fn scalar_cmp(value: &Scalar, needle: &str) -> Option<CmpOrdering> {
    match value {
        Scalar::Number(n) => crate::scalar::leading_decimal(needle).map(|m| n.total_cmp(&m)),
        Scalar::Date(d) => DateValue::parse(needle).map(|nd| d.sort_key().cmp(&nd.sort_key())),
        Scalar::Text(s) => {
            // Text attributes may hold numeric-with-unit or date spellings.
            if let (Some(a), Some(b)) = (
                crate::scalar::leading_decimal(s),
                crate::scalar::leading_decimal(needle),
            ) {
                return Some(a.total_cmp(&b));
            }
            match (DateValue::parse(s), DateValue::parse(needle)) {
                (Some(a), Some(b)) => Some(a.sort_key().cmp(&b.sort_key())),
                _ => None,
            }
        }
    }
}

fn index_items(items: &[Item]) -> HashMap<&str, &Item> {
    items.iter().map(|i| (i.id.as_str(), i)).collect()
}

fn check_permutation(order: &Ordering, items: &[Item]) -> Result<(), EngineError> {
    if order.is_permutation_of(items) {
        Ok(())
    } else {
        Err(EngineError::InvalidOrdering)
    }
}

/// Resolve a positional selector against the given order. `ByItemText` must
/// match exactly one item.
fn resolve_selector(
    selector: &Selector,
    order: &[String],
    items: &HashMap<&str, &Item>,
) -> Result<String, EngineError> {
    match selector {
        Selector::ByItemText(text) => {
            let matches: Vec<&String> = order
                .iter()
                .filter(|id| &items[id.as_str()].text == text)
                .collect();
            if matches.len() != 1 {
                return Err(EngineError::UnknownItem(text.clone(), matches.len()));
            }
            Ok(matches[0].clone())
        }
        Selector::CurrentFirst => Ok(order.first().expect("non-empty order").clone()),
        Selector::CurrentLast => Ok(order.last().expect("non-empty order").clone()),
    }
}

/// Apply one condition to an ordering, returning the new ordering.
///
/// Sorts are stable; partitions keep both blocks in input order; positional
/// moves remove the selected item and reinsert it at the target end, with
/// self-referential selectors resolving against the input order of this call.
pub fn apply_condition(
    order: &Ordering,
    items: &[Item],
    cond: &Condition,
) -> Result<Ordering, EngineError> {
    check_permutation(order, items)?;
    if order.is_empty() {
        return Ok(order.clone());
    }
    let index = index_items(items);
    let ids = order.ids();
    match &cond.directive {
        Directive::SortByKey {
            attribute,
            key_kind,
            order: direction,
        } => {
            let mut keyed: Vec<(SortKey, &String)> = Vec::with_capacity(ids.len());
            for id in ids {
                keyed.push((sort_key(index[id.as_str()], attribute, *key_kind)?, id));
            }
            keyed.sort_by(|a, b| {
                let cmp = a.0.compare(&b.0);
                match direction {
                    SortOrder::Ascending => cmp,
                    SortOrder::Descending => cmp.reverse(),
                }
            });
            Ok(Ordering(
                keyed.into_iter().map(|(_, id)| id.clone()).collect(),
            ))
        }
        Directive::PartitionMove {
            predicate,
            placement,
        } => {
            let mask = predicate_matches(&index, ids, predicate)?;
            let (mut hits, mut rest): (Vec<String>, Vec<String>) = (Vec::new(), Vec::new());
            for (id, hit) in ids.iter().zip(&mask) {
                if *hit {
                    hits.push(id.clone());
                } else {
                    rest.push(id.clone());
                }
            }
            let merged = match placement {
                Placement::Front => hits.into_iter().chain(rest).collect(),
                Placement::Back => rest.into_iter().chain(hits).collect(),
            };
            Ok(Ordering(merged))
        }
        Directive::PositionalMove { selector, target } => {
            let selected = resolve_selector(selector, ids, &index)?;
            let mut remaining: Vec<String> =
                ids.iter().filter(|id| **id != selected).cloned().collect();
            match target {
                Placement::Front => remaining.insert(0, selected),
                Placement::Back => remaining.push(selected),
            }
            Ok(Ordering(remaining))
        }
    }
}

/// The gold ranking: fold `apply_condition` over the conditions sorted
/// ascending by priority, starting from the presented order.
pub fn gold_ranking(
    items: &[Item],
    presented: &Ordering,
    conds: &[Condition],
) -> Result<Ordering, EngineError> {
    let mut current = presented.clone();
    for cond in sort_by_priority(conds) {
        current = apply_condition(&current, items, &cond)?;
    }
    Ok(current)
}

/// Check whether an ordering satisfies a condition.
///
/// Self-referential positional conditions resolve their selected item
/// against `reference` (the pre-application order); identity templates are
/// always satisfied.
pub fn satisfies(
    order: &Ordering,
    items: &[Item],
    cond: &Condition,
    reference: Option<&Ordering>,
) -> Result<bool, EngineError> {
    check_permutation(order, items)?;
    if order.is_empty() {
        return Ok(true);
    }
    if cond.directive.is_identity() {
        return Ok(true);
    }
    let index = index_items(items);
    let ids = order.ids();
    match &cond.directive {
        Directive::SortByKey {
            attribute,
            key_kind,
            order: direction,
        } => {
            let mut keys = Vec::with_capacity(ids.len());
            for id in ids {
                keys.push(sort_key(index[id.as_str()], attribute, *key_kind)?);
            }
            Ok(keys.windows(2).all(|w| {
                let cmp = w[0].compare(&w[1]);
                match direction {
                    SortOrder::Ascending => cmp != CmpOrdering::Greater,
                    SortOrder::Descending => cmp != CmpOrdering::Less,
                }
            }))
        }
        Directive::PartitionMove {
            predicate,
            placement,
        } => {
            let mask = predicate_matches(&index, ids, predicate)?;
            let ok = match placement {
                // Every matching item precedes every non-matching item.
                Placement::Front => mask.windows(2).all(|w| w[0] || !w[1]),
                Placement::Back => mask.windows(2).all(|w| !w[0] || w[1]),
            };
            Ok(ok)
        }
        Directive::PositionalMove { selector, target } => {
            let selected = match selector {
                Selector::ByItemText(_) => resolve_selector(selector, ids, &index)?,
                Selector::CurrentFirst | Selector::CurrentLast => {
                    let reference = reference.ok_or(EngineError::MissingReference)?;
                    check_permutation(reference, items)?;
                    resolve_selector(selector, reference.ids(), &index)?
                }
            };
            Ok(match target {
                Placement::Front => ids.first() == Some(&selected),
                Placement::Back => ids.last() == Some(&selected),
            })
        }
    }
}

/// Whether all items carry pairwise-distinct keys under a sort directive.
pub(crate) fn has_distinct_keys(
    items: &[Item],
    attribute: &str,
    kind: KeyKind,
) -> Result<bool, EngineError> {
    let mut keys = Vec::with_capacity(items.len());
    for item in items {
        keys.push(sort_key(item, attribute, kind)?);
    }
    for i in 0..keys.len() {
        for j in (i + 1)..keys.len() {
            if keys[i].compare(&keys[j]) == CmpOrdering::Equal {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// How many of the items a predicate selects.
pub(crate) fn partition_match_count(
    items: &[Item],
    predicate: &Predicate,
) -> Result<usize, EngineError> {
    let index = index_items(items);
    let ids: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
    let mask = predicate_matches(&index, &ids, predicate)?;
    Ok(mask.iter().filter(|m| **m).count())
}

/// Count of item pairs ordered differently by the two permutations.
fn inversion_distance(a: &[String], b: &[String]) -> usize {
    let pos: HashMap<&str, usize> = b
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mapped: Vec<usize> = a.iter().map(|id| pos[id.as_str()]).collect();
    let mut count = 0;
    for i in 0..mapped.len() {
        for j in (i + 1)..mapped.len() {
            if mapped[i] > mapped[j] {
                count += 1;
            }
        }
    }
    count
}

fn permutations_of(ids: &[String]) -> Vec<Vec<String>> {
    // Heap's algorithm, iterative.
    let mut out = Vec::new();
    let mut work: Vec<String> = ids.to_vec();
    let n = work.len();
    let mut counters = vec![0usize; n];
    out.push(work.clone());
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                work.swap(0, i);
            } else {
                work.swap(counters[i], i);
            }
            out.push(work.clone());
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    out
}

/// Independent gold oracle by exhaustive search over all permutations.
///
/// Working up the priority levels (lowest first), each level replaces the
/// current order with the permutation that satisfies every condition of the
/// level and sits at minimal pairwise-inversion distance from the current
/// order. Stable sorts, stable partitions, and positional moves are exactly
/// such minimizers, so on every input where those minimizers are unique this
/// search reproduces the fold without sharing its application code. A level
/// no permutation satisfies (contradictory conditions of equal priority)
/// leaves the order unchanged; distance ties break by the reading order of
/// the incumbent.
pub fn brute_force_gold(
    items: &[Item],
    presented: &Ordering,
    conds: &[Condition],
) -> Result<Ordering, EngineError> {
    const LIMIT: usize = 8;
    if items.len() > LIMIT {
        return Err(EngineError::TooManyItems {
            limit: LIMIT,
            got: items.len(),
        });
    }
    check_permutation(presented, items)?;
    let sorted = sort_by_priority(conds);

    // Ascending levels with the conditions of each.
    let mut levels: Vec<(Priority, Vec<&Condition>)> = Vec::new();
    for cond in &sorted {
        match levels.last_mut() {
            Some((p, group)) if *p == cond.priority => group.push(cond),
            _ => levels.push((cond.priority, vec![cond])),
        }
    }

    let perms = permutations_of(presented.ids());
    let mut current = presented.clone();
    for (_, group) in &levels {
        let mut best: Option<(usize, Vec<usize>, Vec<String>)> = None;
        for perm in &perms {
            let ord = Ordering(perm.clone());
            let mut all_ok = true;
            for cond in group {
                if !satisfies(&ord, items, cond, Some(&current))? {
                    all_ok = false;
                    break;
                }
            }
            if !all_ok {
                continue;
            }
            let distance = inversion_distance(perm, current.ids());
            // Deterministic tie-break: positions read in the incumbent order.
            let pos: HashMap<&str, usize> = current
                .ids()
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect();
            let reading: Vec<usize> = perm.iter().map(|id| pos[id.as_str()]).collect();
            let candidate = (distance, reading, perm.clone());
            if best.as_ref().map(|b| candidate < *b).unwrap_or(true) {
                best = Some(candidate);
            }
        }
        if let Some((_, _, perm)) = best {
            current = Ordering(perm);
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{parse_condition, Condition};

    fn token_item(id: &str, text: &str, attrs: &[(&str, Scalar)]) -> Item {
        Item {
            id: id.to_string(),
            text: text.to_string(),
            level: ItemLevel::Token,
            attributes: attrs
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            positional_ok: true,
        }
    }

    fn fruits() -> Vec<Item> {
        vec![
            token_item("a", "apple", &[("location", Scalar::Text("Asia".into()))]),
            token_item(
                "b",
                "banana",
                &[("location", Scalar::Text("Africa".into()))],
            ),
            token_item("k", "kiwi", &[("location", Scalar::Text("Africa".into()))]),
        ]
    }

    fn ord(ids: &[&str]) -> Ordering {
        Ordering::new(ids.iter().map(|s| s.to_string()).collect())
    }

    fn cond(surface: &str) -> Condition {
        parse_condition(surface).unwrap()
    }

    #[test]
    fn char_count_sort_orders_by_trimmed_length() {
        // "kiwi"=4, "apple"=5, "banana"=6
        let items = fruits();
        let charcount =
            cond("Sort the items based on their character count from the smallest to largest");
        let out = apply_condition(&ord(&["b", "k", "a"]), &items, &charcount).unwrap();
        assert_eq!(out, ord(&["k", "a", "b"]));
    }

    #[test]
    fn identity_template_returns_input_unchanged() {
        let items = fruits();
        let c = cond("First item in the final sorted order should appear in the beginning");
        let input = ord(&["a", "b", "k"]);
        assert_eq!(apply_condition(&input, &items, &c).unwrap(), input);
    }

    #[test]
    fn move_named_item_to_back() {
        let items = fruits();
        let c = cond("Item \"apple\" should be the last from left");
        let out = apply_condition(&ord(&["a", "k", "b"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["k", "b", "a"]));
    }

    #[test]
    fn current_first_moves_head_to_tail() {
        let items = fruits();
        let c = cond("First item in the final sorted order should appear in the end");
        let out = apply_condition(&ord(&["a", "b", "k"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["b", "k", "a"]));
    }

    #[test]
    fn partition_is_stable_in_both_blocks() {
        let items = fruits();
        let c = cond("Items that are in \"Africa\" should appear at the beginning");
        let out = apply_condition(&ord(&["a", "b", "k"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["b", "k", "a"]));
        let out = apply_condition(&ord(&["k", "a", "b"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["k", "b", "a"]));
    }

    #[test]
    fn gold_composes_low_then_medium() {
        // Char-count sort first (low), then Africa partition (medium):
        // African items first, each block internally char-count ascending.
        let items = vec![
            token_item("a", "apple", &[("location", Scalar::Text("Asia".into()))]),
            token_item(
                "b",
                "banana",
                &[("location", Scalar::Text("Africa".into()))],
            ),
            token_item("k", "kiwi", &[("location", Scalar::Text("Africa".into()))]),
            token_item("p", "apricot", &[("location", Scalar::Text("Asia".into()))]),
            token_item(
                "m",
                "mandarin",
                &[("location", Scalar::Text("Africa".into()))],
            ),
        ];
        let mut low =
            cond("Sort the items based on their character count from the smallest to largest");
        low.priority = Priority::Low;
        let medium = cond("Items that are in \"Africa\" should appear at the beginning");
        // Hand-derived: counts kiwi=4, apple=5, banana=6, apricot=7, mandarin=8.
        // Low sort: [k, a, b, p, m]; Africa front, stable: [k, b, m | a, p].
        let gold = gold_ranking(
            &items,
            &ord(&["a", "b", "k", "p", "m"]),
            &[medium.clone(), low.clone()],
        )
        .unwrap();
        assert_eq!(gold, ord(&["k", "b", "m", "a", "p"]));

        // Adding a high-priority head-to-tail move on top relocates "kiwi".
        let mut high = cond("First item in the final sorted order should appear in the end");
        high.priority = Priority::High;
        let gold3 = gold_ranking(
            &items,
            &ord(&["a", "b", "k", "p", "m"]),
            &[high.clone(), medium.clone(), low.clone()],
        )
        .unwrap();
        assert_eq!(gold3, ord(&["b", "m", "a", "p", "k"]));
        // And the high condition holds at the end, checked against its
        // pre-application reference.
        let reference =
            gold_ranking(&items, &ord(&["a", "b", "k", "p", "m"]), &[medium, low]).unwrap();
        assert!(satisfies(&gold3, &items, &high, Some(&reference)).unwrap());
    }

    #[test]
    fn one_full_sort_with_distinct_keys_ignores_presented_order() {
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Number(1.0))]),
            token_item("b", "bee", &[("size", Scalar::Number(3.0))]),
            token_item("c", "cat", &[("size", Scalar::Number(2.0))]),
        ];
        let c = cond("Sort the items based on their size from the smallest to the largest");
        for presented in [
            ord(&["a", "b", "c"]),
            ord(&["c", "b", "a"]),
            ord(&["b", "a", "c"]),
        ] {
            let gold = gold_ranking(&items, &presented, std::slice::from_ref(&c)).unwrap();
            assert_eq!(gold, ord(&["a", "c", "b"]));
        }
    }

    #[test]
    fn satisfies_detects_misordered_char_counts() {
        let items = fruits();
        let c = cond("Sort the items based on their character count from the smallest to largest");
        // kiwi=4, banana=6, apple=5 is not ascending
        assert!(!satisfies(&ord(&["k", "b", "a"]), &items, &c, None).unwrap());
        assert!(satisfies(&ord(&["k", "a", "b"]), &items, &c, None).unwrap());
    }

    #[test]
    fn satisfaction_follows_application() {
        let items = fruits();
        for surface in [
            "Items that are in \"Africa\" should appear at the end",
            "Item \"kiwi\" should be the last from right",
            "Last item in the final sorted order should appear in the beginning",
            "Sort the items based on their character count from the smallest to largest",
        ] {
            let c = cond(surface);
            let start = ord(&["a", "b", "k"]);
            let applied = apply_condition(&start, &items, &c).unwrap();
            assert!(
                satisfies(&applied, &items, &c, Some(&start)).unwrap(),
                "surface: {surface}"
            );
        }
    }

    #[test]
    fn self_referential_satisfaction_requires_reference() {
        let items = fruits();
        let c = cond("First item in the final sorted order should appear in the end");
        let err = satisfies(&ord(&["a", "b", "k"]), &items, &c, None).unwrap_err();
        assert_eq!(err, EngineError::MissingReference);
    }

    #[test]
    fn missing_attribute_and_ambiguous_text_error() {
        let mut items = fruits();
        items[0].attributes.clear();
        let c = cond("Items that are in \"Africa\" should appear at the beginning");
        let err = apply_condition(&ord(&["a", "b", "k"]), &items, &c).unwrap_err();
        assert!(matches!(err, EngineError::MissingAttribute { .. }));

        let mut dup = fruits();
        dup[1].text = "apple".into();
        let c = cond("Item \"apple\" should be the last from left");
        let err = apply_condition(&ord(&["a", "b", "k"]), &dup, &c).unwrap_err();
        assert_eq!(err, EngineError::UnknownItem("apple".into(), 2));

        let c = cond("Item \"mango\" should be the last from left");
        let err = apply_condition(&ord(&["a", "b", "k"]), &fruits(), &c).unwrap_err();
        assert_eq!(err, EngineError::UnknownItem("mango".into(), 0));
    }

    #[test]
    fn type_mismatch_on_uncomparable_attribute() {
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Text("smallish".into()))]),
            token_item("b", "bee", &[("size", Scalar::Number(3.0))]),
        ];
        let c = cond("Sort the items based on their size from the smallest to the largest");
        let err = apply_condition(&ord(&["a", "b"]), &items, &c).unwrap_err();
        assert!(matches!(err, EngineError::TypeMismatch { .. }));
    }

    #[test]
    fn ordinal_labels_sort_by_ladder_rank() {
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Text("large".into()))]),
            token_item("b", "bee", &[("size", Scalar::Text("tiny".into()))]),
            token_item("c", "cat", &[("size", Scalar::Text("medium".into()))]),
        ];
        let c = Condition {
            directive: Directive::SortByKey {
                attribute: "size".into(),
                key_kind: KeyKind::OrdinalLabel,
                order: SortOrder::Ascending,
            },
            ..cond("Sort the items based on their size from the smallest to the largest")
        };
        let out = apply_condition(&ord(&["a", "b", "c"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["b", "c", "a"]));
    }

    #[test]
    fn descending_sort_reverses_comparisons() {
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Number(1.0))]),
            token_item("b", "bee", &[("size", Scalar::Number(3.0))]),
            token_item("c", "cat", &[("size", Scalar::Number(2.0))]),
        ];
        let c = Condition {
            directive: Directive::SortByKey {
                attribute: "size".into(),
                key_kind: KeyKind::Number,
                order: SortOrder::Descending,
            },
            ..cond("Sort the items based on their size from the smallest to the largest")
        };
        let out = apply_condition(&ord(&["a", "b", "c"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["b", "c", "a"]));
    }

    #[test]
    fn extremal_predicate_rejects_mixed_value_kinds() {
        let items = vec![
            token_item("a", "ant", &[("score", Scalar::Number(9.0))]),
            token_item("b", "bee", &[("score", Scalar::from_text("1999-01-01"))]),
        ];
        let c = cond("Items that has the largest \"score\" should appear at the beginning");
        let err = apply_condition(&ord(&["a", "b"]), &items, &c).unwrap_err();
        assert!(matches!(err, EngineError::TypeMismatch { .. }));
    }

    #[test]
    fn extremal_predicate_moves_all_tied_items() {
        let items = vec![
            token_item("a", "ant", &[("score", Scalar::Number(9.0))]),
            token_item("b", "bee", &[("score", Scalar::Number(3.0))]),
            token_item("c", "cat", &[("score", Scalar::Number(9.0))]),
        ];
        let c = cond("Items that has the largest \"score\" should appear at the beginning");
        let out = apply_condition(&ord(&["b", "a", "c"]), &items, &c).unwrap();
        assert_eq!(out, ord(&["a", "c", "b"]));
    }

    #[test]
    fn brute_force_matches_fold_on_single_full_sort() {
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Number(5.0))]),
            token_item("b", "bee", &[("size", Scalar::Number(1.0))]),
            token_item("c", "cat", &[("size", Scalar::Number(3.0))]),
        ];
        let c = cond("Sort the items based on their size from the smallest to the largest");
        let presented = ord(&["a", "b", "c"]);
        assert_eq!(
            brute_force_gold(&items, &presented, std::slice::from_ref(&c)).unwrap(),
            gold_ranking(&items, &presented, &[c]).unwrap()
        );
    }

    #[test]
    fn brute_force_rejects_more_than_eight_items() {
        let items: Vec<Item> = (0..9)
            .map(|i| token_item(&format!("i{i}"), &format!("t{i}"), &[]))
            .collect();
        let presented = Ordering::from_items(&items);
        let err = brute_force_gold(&items, &presented, &[]).unwrap_err();
        assert_eq!(err, EngineError::TooManyItems { limit: 8, got: 9 });
    }

    #[test]
    fn brute_force_agrees_with_fold_under_contradiction() {
        // Medium sorts by size; high moves the smallest-sized item's text to
        // the back, contradicting the sort. The fold applies high last.
        let items = vec![
            token_item("a", "ant", &[("size", Scalar::Number(1.0))]),
            token_item("b", "bee", &[("size", Scalar::Number(2.0))]),
            token_item("c", "cat", &[("size", Scalar::Number(3.0))]),
        ];
        let medium = cond("Sort the items based on their size from the smallest to the largest");
        let mut high = cond("Item \"ant\" should be the last from left");
        high.priority = Priority::High;
        let presented = ord(&["c", "a", "b"]);
        let conds = vec![medium, high];
        let fold = gold_ranking(&items, &presented, &conds).unwrap();
        let brute = brute_force_gold(&items, &presented, &conds).unwrap();
        assert_eq!(fold, ord(&["b", "c", "a"]));
        assert_eq!(brute, fold);
    }
}
