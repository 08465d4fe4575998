//! Parsers for model output: token rankings, Item-K rankings, and condition
//! lists. Each either returns a complete result or a typed error — never a
//! partial ordering.

use crate::engine::{Item, Ordering};
use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OutputParseError {
    #[error("model output is not a permutation: {0}")]
    NotAPermutation(String),
    #[error("model output is empty")]
    EmptyOutput,
}

static ENUMERATION: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\s*(?:\d+[.)]|-|\*)\s*").unwrap());
static ITEM_LABEL: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)item-(\d+)").unwrap());

/// Strip a leading enumeration marker ("1.", "2)", "-", "*").
pub(crate) fn strip_enumeration(line: &str) -> &str {
    match ENUMERATION.find(line) {
        Some(m) => &line[m.end()..],
        None => line,
    }
}

fn normalize_fragment(fragment: &str) -> String {
    let s = strip_enumeration(fragment.trim());
    let s = s.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`');
    let s = s.trim_end_matches('.').trim();
    s.to_lowercase()
}

/// Parse a token-level ranking answer into an ordering over item ids.
///
/// The text splits on newlines and commas; fragments are normalized (markers,
/// quotes, case) and matched to item texts, exactly first and by unique
/// substring otherwise. Missing, duplicated, unmatched, or ambiguous items
/// make the whole output invalid.
pub fn parse_token_ranking(text: &str, items: &[Item]) -> Result<Ordering, OutputParseError> {
    let fragments: Vec<String> = text
        .split(['\n', ','])
        .map(normalize_fragment)
        .filter(|f| !f.is_empty())
        .collect();
    if fragments.is_empty() {
        return Err(OutputParseError::NotAPermutation(
            "no items in output".into(),
        ));
    }
    if fragments.len() != items.len() {
        return Err(OutputParseError::NotAPermutation(format!(
            "expected {} items, found {}",
            items.len(),
            fragments.len()
        )));
    }

    let normalized: Vec<String> = items.iter().map(|i| normalize_fragment(&i.text)).collect();
    let mut used = vec![false; items.len()];
    let mut ids = Vec::with_capacity(items.len());
    for fragment in &fragments {
        let exact: Vec<usize> = normalized
            .iter()
            .enumerate()
            .filter(|(idx, t)| !used[*idx] && *t == fragment)
            .map(|(idx, _)| idx)
            .collect();
        let matched = match exact.as_slice() {
            [one] => *one,
            [] => {
                let fuzzy: Vec<usize> = normalized
                    .iter()
                    .enumerate()
                    .filter(|(idx, t)| {
                        !used[*idx]
                            && (t.contains(fragment.as_str()) || fragment.contains(t.as_str()))
                    })
                    .map(|(idx, _)| idx)
                    .collect();
                match fuzzy.as_slice() {
                    [one] => *one,
                    [] => {
                        return Err(OutputParseError::NotAPermutation(format!(
                            "unmatched item {:?}",
                            fragment
                        )))
                    }
                    _ => {
                        return Err(OutputParseError::NotAPermutation(format!(
                            "ambiguous item {:?}",
                            fragment
                        )))
                    }
                }
            }
            _ => {
                return Err(OutputParseError::NotAPermutation(format!(
                    "ambiguous item {:?}",
                    fragment
                )))
            }
        };
        used[matched] = true;
        ids.push(items[matched].id.clone());
    }
    Ok(Ordering::new(ids))
}

/// Parse a paragraph-level answer: all `Item-<digits>` labels in reading
/// order, which must form a permutation of `1..=n_items`. Returns the
/// 1-based label sequence.
pub fn parse_paragraph_ranking(text: &str, n_items: usize) -> Result<Vec<usize>, OutputParseError> {
    let labels: Vec<usize> = ITEM_LABEL
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<usize>().ok())
        .collect();
    if labels.len() != n_items {
        return Err(OutputParseError::NotAPermutation(format!(
            "expected {} labels, found {}",
            n_items,
            labels.len()
        )));
    }
    let mut seen = vec![false; n_items + 1];
    for &l in &labels {
        if l == 0 || l > n_items || seen[l] {
            return Err(OutputParseError::NotAPermutation(format!(
                "bad label Item-{}",
                l
            )));
        }
        seen[l] = true;
    }
    Ok(labels)
}

/// Parse a numbered/bulleted condition list: one condition per line,
/// enumeration markers stripped, blank lines dropped, text otherwise
/// verbatim.
pub fn parse_condition_list(text: &str) -> Result<Vec<String>, OutputParseError> {
    let lines: Vec<String> = text
        .lines()
        .map(|l| strip_enumeration(l.trim()).trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(OutputParseError::EmptyOutput);
    }
    Ok(lines)
}
