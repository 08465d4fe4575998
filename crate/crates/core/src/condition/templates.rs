//! The 36 condition templates and their structured semantics.
//!
//! Surfaces are fixed English phrasings with quoted slots. Two quirks of the
//! original list are kept verbatim: template 10 doubles the word "that", and
//! template 24 repeats the size sort of template 20 (it is treated as an
//! alias and canonicalizes to 20 when parsed or built).
//!
//! Positional semantics worth calling out:
//! - "last from left" is the rightmost position, "last from right" the
//!   leftmost (counting from the right, the last item reached is leftmost).
//! - "First/Last item in the final sorted order" resolves against the order
//!   the condition is applied to; templates 4 and 5 restate a position that
//!   already holds and are identity operations.

use super::{
    check_slot_type, Condition, ConditionCategory, ConditionError, Directive, KeyKind, Placement,
    Predicate, PredicateOp, Priority, Selector, SlotValueKind, SortOrder,
};
use once_cell::sync::Lazy;
use regex::Regex;

/// Number of template ids (1..=36); template 24 is an alias of 20.
pub const TEMPLATE_COUNT: u8 = 36;

/// What a template means, and how its slots map onto the directive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Shape {
    /// Move the item whose text equals slot X.
    MoveByText(Placement),
    /// Move the first item of the current order.
    MoveFirst(Placement),
    /// Move the last item of the current order.
    MoveLast(Placement),
    /// Stable sort by a fixed attribute.
    SortAttr(&'static str, KeyKind),
    /// Stable sort by item character count.
    SortCharCount,
    /// Stable sort by the attribute named in slot X.
    SortSlotAttr,
    /// Stable partition: attribute equals slot X.
    PartEq(&'static str, Placement),
    /// Stable partition: attribute named in slot Y equals slot X.
    PartEqSlotAttr(Placement),
    /// Stable partition: fixed attribute compared against typed slot X.
    PartCmp(&'static str, PredicateOp, Placement, SlotValueKind),
    /// Stable partition: extremal value of the attribute named in slot X.
    PartExtreme(PredicateOp, Placement),
}

pub(crate) struct TemplateDef {
    pub id: u8,
    pub alias_of: Option<u8>,
    pub category: ConditionCategory,
    pub pattern: &'static str,
    pub shape: Shape,
}

use ConditionCategory as Cat;
use Placement::{Back, Front};
use PredicateOp as Op;

pub(crate) const TEMPLATES: &[TemplateDef] = &[
    TemplateDef {
        id: 1,
        alias_of: None,
        category: Cat::Positional,
        pattern: "Item \"[X]\" should be the last from left",
        shape: Shape::MoveByText(Back),
    },
    TemplateDef {
        id: 2,
        alias_of: None,
        category: Cat::Positional,
        pattern: "Item \"[X]\" should be the last from right",
        shape: Shape::MoveByText(Front),
    },
    TemplateDef {
        id: 3,
        alias_of: None,
        category: Cat::Positional,
        pattern: "First item in the final sorted order should appear in the end",
        shape: Shape::MoveFirst(Back),
    },
    TemplateDef {
        id: 4,
        alias_of: None,
        category: Cat::Positional,
        pattern: "First item in the final sorted order should appear in the beginning",
        shape: Shape::MoveFirst(Front),
    },
    TemplateDef {
        id: 5,
        alias_of: None,
        category: Cat::Positional,
        pattern: "Last item in the final sorted order should appear in the end",
        shape: Shape::MoveLast(Back),
    },
    TemplateDef {
        id: 6,
        alias_of: None,
        category: Cat::Positional,
        pattern: "Last item in the final sorted order should appear in the beginning",
        shape: Shape::MoveLast(Front),
    },
    TemplateDef {
        id: 7,
        alias_of: None,
        category: Cat::Locational,
        pattern: "Items that are in \"[X]\" should appear at the beginning",
        shape: Shape::PartEq("location", Front),
    },
    TemplateDef {
        id: 8,
        alias_of: None,
        category: Cat::Locational,
        pattern: "Items that are in \"[X]\" should appear at the end",
        shape: Shape::PartEq("location", Back),
    },
    TemplateDef {
        id: 9,
        alias_of: None,
        category: Cat::Locational,
        pattern: "Items that have \"[Y]\" in \"[X]\" should appear at the beginning",
        shape: Shape::PartEqSlotAttr(Front),
    },
    TemplateDef {
        id: 10,
        alias_of: None,
        category: Cat::Locational,
        pattern: "Items that that have \"[Y]\" in \"[X]\" should appear at the end",
        shape: Shape::PartEqSlotAttr(Back),
    },
    TemplateDef {
        id: 11,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Sort the items based on their birthday from the oldest to the newest",
        shape: Shape::SortAttr("birthday", KeyKind::Date),
    },
    TemplateDef {
        id: 12,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that born before \"[X]\" should appear at the end",
        shape: Shape::PartCmp("birthday", Op::Lt, Back, SlotValueKind::Date),
    },
    TemplateDef {
        id: 13,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that born after \"[X]\" should appear at the beginning",
        shape: Shape::PartCmp("birthday", Op::Gt, Front, SlotValueKind::Date),
    },
    TemplateDef {
        id: 14,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Sort items based on their deadline from the first to the last",
        shape: Shape::SortAttr("deadline", KeyKind::Date),
    },
    TemplateDef {
        id: 15,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that has a deadline before \"[X]\" should appear at the end",
        shape: Shape::PartCmp("deadline", Op::Lt, Back, SlotValueKind::Date),
    },
    TemplateDef {
        id: 16,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that has a deadline after \"[X]\" should appear at the beginning",
        shape: Shape::PartCmp("deadline", Op::Gt, Front, SlotValueKind::Date),
    },
    TemplateDef {
        id: 17,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Sort items based on mentioned publication date from the first to the last",
        shape: Shape::SortAttr("publication_date", KeyKind::Date),
    },
    TemplateDef {
        id: 18,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that has a publication date before \"[X]\" should appear at the end",
        shape: Shape::PartCmp("publication_date", Op::Lt, Back, SlotValueKind::Date),
    },
    TemplateDef {
        id: 19,
        alias_of: None,
        category: Cat::Temporal,
        pattern: "Item that has a publication date after \"[X]\" should appear at the beginning",
        shape: Shape::PartCmp("publication_date", Op::Gt, Front, SlotValueKind::Date),
    },
    TemplateDef {
        id: 20,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Sort the items based on their size from the smallest to the largest",
        shape: Shape::SortAttr("size", KeyKind::Number),
    },
    TemplateDef {
        id: 21,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Sort the items based on their height from the shortest to the tallest",
        shape: Shape::SortAttr("height", KeyKind::Number),
    },
    TemplateDef {
        id: 22,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with a size of less than \"[X]\" should appear at the end",
        shape: Shape::PartCmp("size", Op::Lt, Back, SlotValueKind::Number),
    },
    TemplateDef {
        id: 23,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with a size of more than \"[X]\" should appear at the beginning",
        shape: Shape::PartCmp("size", Op::Gt, Front, SlotValueKind::Number),
    },
    TemplateDef {
        id: 24,
        alias_of: Some(20),
        category: Cat::Trait,
        pattern: "Sort the items based on their size from the smallest to the largest",
        shape: Shape::SortAttr("size", KeyKind::Number),
    },
    TemplateDef {
        id: 25,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item that is a \"[X]\" should appear at the end",
        shape: Shape::PartEq("type", Back),
    },
    TemplateDef {
        id: 26,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item that is a \"[X]\" should appear at the beginning",
        shape: Shape::PartEq("type", Front),
    },
    TemplateDef {
        id: 27,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with a \"[X]\" color should appear at the end",
        shape: Shape::PartEq("color", Back),
    },
    TemplateDef {
        id: 28,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with a \"[X]\" color should appear at the beginning",
        shape: Shape::PartEq("color", Front),
    },
    TemplateDef {
        id: 29,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with the \"[X]\" genre should appear at the end",
        shape: Shape::PartEq("genre", Back),
    },
    TemplateDef {
        id: 30,
        alias_of: None,
        category: Cat::Trait,
        pattern: "Item with the \"[X]\" genre should appear at the beginning",
        shape: Shape::PartEq("genre", Front),
    },
    TemplateDef {
        id: 31,
        alias_of: None,
        category: Cat::CharCount,
        pattern: "Sort the items based on their character count from the smallest to largest",
        shape: Shape::SortCharCount,
    },
    TemplateDef {
        id: 32,
        alias_of: None,
        category: Cat::Reason,
        pattern: "Items in the category \"[X]\" should appear at the beginning",
        shape: Shape::PartEq("category", Front),
    },
    TemplateDef {
        id: 33,
        alias_of: None,
        category: Cat::Reason,
        pattern: "Items in the category \"[X]\" should appear at the end",
        shape: Shape::PartEq("category", Back),
    },
    TemplateDef {
        id: 34,
        alias_of: None,
        category: Cat::Reason,
        pattern: "Sort items based on \"[X]\" from the smallest to the largest",
        shape: Shape::SortSlotAttr,
    },
    TemplateDef {
        id: 35,
        alias_of: None,
        category: Cat::Reason,
        pattern: "Items that has the largest \"[X]\" should appear at the beginning",
        shape: Shape::PartExtreme(Op::IsMax, Front),
    },
    TemplateDef {
        id: 36,
        alias_of: None,
        category: Cat::Reason,
        pattern: "Items that has the smallest \"[X]\" should appear at the end",
        shape: Shape::PartExtreme(Op::IsMin, Back),
    },
];

static MATCHERS: Lazy<Vec<Regex>> = Lazy::new(|| {
    TEMPLATES
        .iter()
        .map(|def| {
            let mut pat = regex::escape(def.pattern);
            // Slots are quoted in every pattern; values may not contain quotes.
            pat = pat.replace("\\[X\\]", "(?P<x>[^\"]*)");
            pat = pat.replace("\\[Y\\]", "(?P<y>[^\"]*)");
            Regex::new(&format!("^{}$", pat)).expect("template pattern compiles")
        })
        .collect()
});

fn def_for(template_id: u8) -> Option<&'static TemplateDef> {
    TEMPLATES.iter().find(|d| d.id == template_id)
}

/// Resolve an alias id (24 → 20); other ids map to themselves.
pub fn canonical_template_id(template_id: u8) -> u8 {
    def_for(template_id)
        .and_then(|d| d.alias_of)
        .unwrap_or(template_id)
}

/// The category a template id belongs to.
pub fn template_category(template_id: u8) -> Option<ConditionCategory> {
    def_for(template_id).map(|d| d.category)
}

/// Distinct (non-alias) template ids of a category, in table order.
pub(crate) fn category_template_ids(category: ConditionCategory) -> Vec<u8> {
    TEMPLATES
        .iter()
        .filter(|d| d.category == category && d.alias_of.is_none())
        .map(|d| d.id)
        .collect()
}

pub(crate) fn template_shape(template_id: u8) -> Option<Shape> {
    def_for(template_id).map(|d| d.shape)
}

fn slot_kind_for(shape: Shape) -> SlotValueKind {
    match shape {
        Shape::PartCmp(_, _, _, kind) => kind,
        _ => SlotValueKind::Any,
    }
}

fn needs_x(pattern: &str) -> bool {
    pattern.contains("[X]")
}

fn needs_y(pattern: &str) -> bool {
    pattern.contains("[Y]")
}

fn validate_slot(
    template_id: u8,
    name: &str,
    value: Option<&str>,
    kind: SlotValueKind,
) -> Result<String, ConditionError> {
    let value = value.unwrap_or_default();
    if value.is_empty() {
        return Err(ConditionError::MalformedSlot {
            template_id,
            reason: format!("slot {} is empty", name),
        });
    }
    if value.contains('"') {
        return Err(ConditionError::MalformedSlot {
            template_id,
            reason: format!("slot {} contains a quote", name),
        });
    }
    check_slot_type(template_id, value, kind)?;
    Ok(value.to_string())
}

fn directive_for(
    def: &TemplateDef,
    x: Option<&str>,
    y: Option<&str>,
) -> Result<Directive, ConditionError> {
    let id = canonical_template_id(def.id);
    let x_val = if needs_x(def.pattern) {
        Some(validate_slot(id, "[X]", x, slot_kind_for(def.shape))?)
    } else {
        None
    };
    let y_val = if needs_y(def.pattern) {
        Some(validate_slot(id, "[Y]", y, SlotValueKind::Any)?)
    } else {
        None
    };

    Ok(match def.shape {
        Shape::MoveByText(target) => Directive::PositionalMove {
            selector: Selector::ByItemText(x_val.unwrap()),
            target,
        },
        Shape::MoveFirst(target) => Directive::PositionalMove {
            selector: Selector::CurrentFirst,
            target,
        },
        Shape::MoveLast(target) => Directive::PositionalMove {
            selector: Selector::CurrentLast,
            target,
        },
        Shape::SortAttr(attr, kind) => Directive::SortByKey {
            attribute: attr.to_string(),
            key_kind: kind,
            order: SortOrder::Ascending,
        },
        Shape::SortCharCount => Directive::SortByKey {
            attribute: "char_count".to_string(),
            key_kind: KeyKind::TextLength,
            order: SortOrder::Ascending,
        },
        Shape::SortSlotAttr => Directive::SortByKey {
            attribute: x_val.unwrap(),
            key_kind: KeyKind::Number,
            order: SortOrder::Ascending,
        },
        Shape::PartEq(attr, placement) => Directive::PartitionMove {
            predicate: Predicate {
                attribute: attr.to_string(),
                op: Op::Eq,
                value: Some(x_val.unwrap()),
            },
            placement,
        },
        Shape::PartEqSlotAttr(placement) => Directive::PartitionMove {
            predicate: Predicate {
                attribute: y_val.unwrap(),
                op: Op::Eq,
                value: Some(x_val.unwrap()),
            },
            placement,
        },
        Shape::PartCmp(attr, op, placement, _) => Directive::PartitionMove {
            predicate: Predicate {
                attribute: attr.to_string(),
                op,
                value: Some(x_val.unwrap()),
            },
            placement,
        },
        Shape::PartExtreme(op, placement) => Directive::PartitionMove {
            predicate: Predicate {
                attribute: x_val.unwrap(),
                op,
                value: None,
            },
            placement,
        },
    })
}

fn render_surface(pattern: &str, x: Option<&str>, y: Option<&str>) -> String {
    let mut s = pattern.to_string();
    if let Some(x) = x {
        s = s.replace("[X]", x);
    }
    if let Some(y) = y {
        s = s.replace("[Y]", y);
    }
    s
}

pub(crate) fn build(
    template_id: u8,
    x: Option<&str>,
    y: Option<&str>,
    priority: Priority,
) -> Result<Condition, ConditionError> {
    let def = def_for(template_id).ok_or_else(|| {
        ConditionError::UnrecognizedTemplate(format!("template id {}", template_id))
    })?;
    let directive = directive_for(def, x, y)?;
    Ok(Condition {
        template_id: canonical_template_id(def.id),
        category: def.category,
        priority,
        directive,
        surface: render_surface(def.pattern, x, y),
    })
}

pub(crate) fn parse(surface: &str, priority: Priority) -> Result<Condition, ConditionError> {
    for (def, re) in TEMPLATES.iter().zip(MATCHERS.iter()) {
        if let Some(caps) = re.captures(surface) {
            let x = caps.name("x").map(|m| m.as_str());
            let y = caps.name("y").map(|m| m.as_str());
            let directive = directive_for(def, x, y)?;
            return Ok(Condition {
                template_id: canonical_template_id(def.id),
                category: def.category,
                priority,
                directive,
                surface: surface.to_string(),
            });
        }
    }
    Err(ConditionError::UnrecognizedTemplate(surface.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_slots(id: u8) -> (Option<&'static str>, Option<&'static str>) {
        let def = def_for(id).unwrap();
        let x = if needs_x(def.pattern) {
            Some(match slot_kind_for(def.shape) {
                SlotValueKind::Date => "1969-07-20",
                SlotValueKind::Number => "42",
                SlotValueKind::Any => "sample value",
            })
        } else {
            None
        };
        let y = needs_y(def.pattern).then_some("country of citizenship");
        (x, y)
    }

    #[test]
    fn every_template_round_trips() {
        for def in TEMPLATES {
            let (x, y) = sample_slots(def.id);
            for priority in [Priority::Low, Priority::Medium, Priority::High] {
                let cond = build(def.id, x, y, priority).unwrap();
                let rendered = super::super::render_condition(&cond, true);
                let parsed = super::super::parse_condition(&rendered).unwrap();
                assert_eq!(parsed, cond, "template {} with tag", def.id);
            }
        }
    }

    #[test]
    fn parsing_is_injective_over_templates() {
        // No rendering of one template may parse as a different template
        // (the alias pair 24/20 shares one canonical id by construction).
        for def in TEMPLATES {
            let (x, y) = sample_slots(def.id);
            let cond = build(def.id, x, y, Priority::Medium).unwrap();
            let parsed = super::super::parse_condition(&cond.surface).unwrap();
            assert_eq!(parsed.template_id, canonical_template_id(def.id));
        }
    }

    #[test]
    fn table_covers_exactly_36_ids() {
        let mut ids: Vec<u8> = TEMPLATES.iter().map(|d| d.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=TEMPLATE_COUNT).collect::<Vec<u8>>());
    }

    #[test]
    fn category_ranges_match_the_table() {
        for def in TEMPLATES {
            let expected = match def.id {
                1..=6 => Cat::Positional,
                7..=10 => Cat::Locational,
                11..=19 => Cat::Temporal,
                31 => Cat::CharCount,
                20..=30 => Cat::Trait,
                _ => Cat::Reason,
            };
            assert_eq!(def.category, expected, "template {}", def.id);
        }
    }

    #[test]
    fn identity_templates_are_flagged() {
        for id in [4u8, 5] {
            let cond = build(id, None, None, Priority::Medium).unwrap();
            assert!(cond.directive.is_identity(), "template {}", id);
        }
        for id in [3u8, 6] {
            let cond = build(id, None, None, Priority::Medium).unwrap();
            assert!(!cond.directive.is_identity(), "template {}", id);
            assert!(cond.directive.is_self_referential(), "template {}", id);
        }
    }
}
