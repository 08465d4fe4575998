//! The condition DSL: structured directives behind 36 English condition
//! templates, with deterministic parse/render round-tripping.
//!
//! A condition string shown to a model is one or more rendered templates
//! joined by `"; "`, each optionally prefixed by a priority tag of the form
//! `(low priority): `, `(medium priority): `, or `(high priority): `.

pub(crate) mod templates;

pub use templates::{canonical_template_id, template_category, TEMPLATE_COUNT};

use crate::scalar::{leading_decimal, DateValue};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Priority level of a condition. Conditions apply lowest first, so a higher
/// priority dominates by being applied later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Low,
    Medium,
    High,
}

impl Priority {
    pub fn tag_word(self) -> &'static str {
        match self {
            Priority::Low => "low",
            Priority::Medium => "medium",
            Priority::High => "high",
        }
    }
}

/// The five condition categories plus character count, which is kept distinct
/// because it is the dedicated low-priority extra condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionCategory {
    Positional,
    Locational,
    Temporal,
    Trait,
    Reason,
    CharCount,
}

impl ConditionCategory {
    /// The five categories a sample's medium condition is drawn from.
    pub const DRAWABLE: [ConditionCategory; 5] = [
        ConditionCategory::Positional,
        ConditionCategory::Locational,
        ConditionCategory::Temporal,
        ConditionCategory::Trait,
        ConditionCategory::Reason,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionCategory::Positional => "positional",
            ConditionCategory::Locational => "locational",
            ConditionCategory::Temporal => "temporal",
            ConditionCategory::Trait => "trait",
            ConditionCategory::Reason => "reason",
            ConditionCategory::CharCount => "charcount",
        }
    }
}

/// Sort direction for full-order conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Ascending,
    Descending,
}

/// How a sort key is read out of an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyKind {
    Number,
    Date,
    /// Number of characters in the item text (trimmed, spaces included).
    TextLength,
    /// A label from a fixed ordered vocabulary ("tiny" < "small" < ...).
    OrdinalLabel,
}

/// Comparison op of a partition predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateOp {
    Eq,
    Lt,
    Gt,
    IsMax,
    IsMin,
}

/// Selects items for a stable partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub attribute: String,
    pub op: PredicateOp,
    /// Verbatim slot text; present iff `op` is `Eq`, `Lt`, or `Gt`.
    pub value: Option<String>,
}

/// Front or back of the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Front,
    Back,
}

/// Selects the item a positional move applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    /// The unique item whose text equals the slot value.
    ByItemText(String),
    /// The first item of the order the condition is applied to.
    CurrentFirst,
    /// The last item of the order the condition is applied to.
    CurrentLast,
}

/// What a condition does to an ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Directive {
    SortByKey {
        attribute: String,
        key_kind: KeyKind,
        order: SortOrder,
    },
    PartitionMove {
        predicate: Predicate,
        placement: Placement,
    },
    PositionalMove {
        selector: Selector,
        target: Placement,
    },
}

impl Directive {
    /// True for moves that restate the current position ("first item should
    /// appear in the beginning"); they never change an ordering and are
    /// always satisfied.
    pub fn is_identity(&self) -> bool {
        matches!(
            self,
            Directive::PositionalMove {
                selector: Selector::CurrentFirst,
                target: Placement::Front
            } | Directive::PositionalMove {
                selector: Selector::CurrentLast,
                target: Placement::Back
            }
        )
    }

    /// True when satisfaction checking needs the pre-application order to
    /// resolve the selected item.
    pub fn is_self_referential(&self) -> bool {
        matches!(
            self,
            Directive::PositionalMove {
                selector: Selector::CurrentFirst | Selector::CurrentLast,
                ..
            }
        )
    }
}

/// A parsed condition: template identity, category, priority, structured
/// directive, and the exact English surface it renders to (without tag).
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub template_id: u8,
    pub category: ConditionCategory,
    pub priority: Priority,
    pub directive: Directive,
    pub surface: String,
}

impl Condition {
    /// Build a condition from a template id and slot values.
    ///
    /// `template_id` 24 is an alias of 20 (the template list repeats the size
    /// sort) and canonicalizes to 20.
    pub fn from_template(
        template_id: u8,
        x: Option<&str>,
        y: Option<&str>,
        priority: Priority,
    ) -> Result<Condition, ConditionError> {
        templates::build(template_id, x, y, priority)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConditionError {
    #[error("no condition template matches: {0:?}")]
    UnrecognizedTemplate(String),
    #[error("malformed slot value in template {template_id}: {reason}")]
    MalformedSlot { template_id: u8, reason: String },
}

/// Parse one rendered condition, with an optional leading priority tag.
/// Untagged conditions default to medium priority.
pub fn parse_condition(surface: &str) -> Result<Condition, ConditionError> {
    let (priority, rest) = split_priority_tag(surface);
    templates::parse(rest, priority)
}

fn split_priority_tag(surface: &str) -> (Priority, &str) {
    for (word, p) in [
        ("low", Priority::Low),
        ("medium", Priority::Medium),
        ("high", Priority::High),
    ] {
        let tag = format!("({} priority): ", word);
        if let Some(rest) = surface.strip_prefix(&tag) {
            return (p, rest);
        }
    }
    (Priority::Medium, surface)
}

/// Render a condition back to its English surface, optionally with the
/// priority tag prefix.
pub fn render_condition(cond: &Condition, with_priority_tag: bool) -> String {
    if with_priority_tag {
        format!("({} priority): {}", cond.priority.tag_word(), cond.surface)
    } else {
        cond.surface.clone()
    }
}

/// Separator between rendered conditions in a condition string.
pub const CONDITION_SEPARATOR: &str = "; ";

/// Split a condition string on the dataset separator and parse each fragment,
/// keeping surface order.
pub fn extract_conditions(condition_string: &str) -> Result<Vec<Condition>, ConditionError> {
    condition_string
        .split(CONDITION_SEPARATOR)
        .map(parse_condition)
        .collect()
}

/// Stable sort ascending by priority: low first, high last; equal priorities
/// keep surface order.
pub fn sort_by_priority(conds: &[Condition]) -> Vec<Condition> {
    let mut out = conds.to_vec();
    out.sort_by_key(|c| c.priority);
    out
}

/// Join rendered conditions (tags included) into a presented condition string.
pub fn join_condition_string(conds: &[Condition]) -> String {
    conds
        .iter()
        .map(|c| render_condition(c, true))
        .collect::<Vec<_>>()
        .join(CONDITION_SEPARATOR)
}

/// Validate a typed slot value for templates that compare dates or numbers.
pub(crate) fn check_slot_type(
    template_id: u8,
    value: &str,
    kind: SlotValueKind,
) -> Result<(), ConditionError> {
    let ok = match kind {
        SlotValueKind::Any => true,
        SlotValueKind::Date => DateValue::parse(value).is_some(),
        SlotValueKind::Number => leading_decimal(value).is_some(),
    };
    if ok {
        Ok(())
    } else {
        Err(ConditionError::MalformedSlot {
            template_id,
            reason: format!("{:?} is not a valid {:?} value", value, kind),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SlotValueKind {
    Any,
    Date,
    Number,
}
