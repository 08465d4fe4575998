//! Prompt templates for ranking, condition extraction, and condition
//! sorting, plus the zero-shot CoT variants.
//!
//! Token-level items render as a quoted comma list; paragraph-level items
//! render as `Item-K: <text>` lines and models answer with a permutation of
//! the `Item-K` labels.

use crate::backend::BackendError;
use crate::engine::{Item, ItemLevel};
use serde::{Deserialize, Serialize};

/// The six prompt templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    RankTokenLevel,
    RankParagraphLevel,
    ExtractConditions,
    SortConditions,
    RankTokenCot,
    RankParagraphCot,
}

impl PromptKind {
    /// Item level a ranking prompt expects; `None` for extract/sort.
    pub fn level(self) -> Option<ItemLevel> {
        match self {
            PromptKind::RankTokenLevel | PromptKind::RankTokenCot => Some(ItemLevel::Token),
            PromptKind::RankParagraphLevel | PromptKind::RankParagraphCot => {
                Some(ItemLevel::Paragraph)
            }
            PromptKind::ExtractConditions | PromptKind::SortConditions => None,
        }
    }

    pub fn is_ranking(self) -> bool {
        self.level().is_some()
    }

    /// The ranking kind for an item level, base or CoT flavor.
    pub fn ranking_for(level: ItemLevel, cot: bool) -> PromptKind {
        match (level, cot) {
            (ItemLevel::Token, false) => PromptKind::RankTokenLevel,
            (ItemLevel::Paragraph, false) => PromptKind::RankParagraphLevel,
            (ItemLevel::Token, true) => PromptKind::RankTokenCot,
            (ItemLevel::Paragraph, true) => PromptKind::RankParagraphCot,
        }
    }
}

pub(crate) const TOKEN_ITEMS_ANCHOR: &str = "sort the list of items ";
pub(crate) const TOKEN_ITEMS_END: &str = " from left to right.";
pub(crate) const CONDITIONS_ANCHOR: &str = "Given following conditions: \"";
pub(crate) const CONDITIONS_END: &str = "\", sort the";
pub(crate) const LIST_ANCHOR: &str = "\nConditions: ";

const COT_INSTRUCTION: &str = "To sort the items, first extract the conditions, then sort the \
conditions based on their priority. Finally, apply the sorted conditions on the list of items \
iteratively updating their order in each iteration. Only report the final sorted list of items.";

/// Quote one token item for the item list.
fn quoted(text: &str) -> String {
    format!("\"{}\"", text)
}

fn token_item_list(items: &[Item]) -> String {
    items
        .iter()
        .map(|i| quoted(&i.text))
        .collect::<Vec<_>>()
        .join(", ")
}

fn paragraph_item_block(items: &[Item]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(idx, i)| format!("Item-{}: {}", idx + 1, i.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Render the prompt of the given kind. Ranking kinds require items of the
/// matching level; extract/sort kinds ignore `items`.
pub fn render_prompt(
    kind: PromptKind,
    condition_string: &str,
    items: &[Item],
) -> Result<String, BackendError> {
    if let Some(level) = kind.level() {
        if let Some(bad) = items.iter().find(|i| i.level != level) {
            return Err(BackendError::LevelMismatch {
                expected: level,
                got: bad.level,
                item_id: bad.id.clone(),
            });
        }
    }
    let prompt = match kind {
        PromptKind::RankTokenLevel => format!(
            "Given following conditions: \"{}\", sort the list of items {} from left to right. \
             Do not provide any explanation.",
            condition_string,
            token_item_list(items)
        ),
        PromptKind::RankTokenCot => format!(
            "Given following conditions: \"{}\", sort the list of items {} from left to right. \
             Do not provide any explanation.\n{}",
            condition_string,
            token_item_list(items),
            COT_INSTRUCTION
        ),
        PromptKind::RankParagraphLevel => format!(
            "Given following conditions: \"{}\", sort the items from left to right. Do not \
             provide any explanation and only provide a permutation of Item-1, ..., Item-k \
             enter separated as the output.\n{}",
            condition_string,
            paragraph_item_block(items)
        ),
        PromptKind::RankParagraphCot => format!(
            "Given following conditions: \"{}\", sort the items from left to right. Do not \
             provide any explanation and only provide a permutation of Item-1, ..., Item-k \
             enter separated as the output.\n{}\n{}",
            condition_string,
            COT_INSTRUCTION,
            paragraph_item_block(items)
        ),
        PromptKind::ExtractConditions => format!(
            "Given the conditions, extract the conditions into numbered items separated by \
             enter. Do not provide any explanation and do not modify the conditions.\
             \nConditions: {}",
            condition_string
        ),
        PromptKind::SortConditions => format!(
            "Given the conditions, sort these conditions in the order that they should be \
             applied to a list of items sequentially based on their priority to satisfy all \
             their requirements as much as possible from the lowest priority to the highest \
             priority. Do not provide any explanation and do not modify the conditions.\
             \nConditions: {}",
            condition_string
        ),
    };
    Ok(prompt)
}

/// Number a list of condition surfaces for the sort prompt.
pub fn numbered_list(lines: &[String]) -> String {
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| format!("{}. {}", i + 1, line))
        .collect::<Vec<_>>()
        .join("\n")
}
