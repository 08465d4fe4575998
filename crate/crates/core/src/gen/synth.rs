//! Deterministic synthetic item pools for offline generation and tests.
//!
//! Entries cover the attribute needs of all five condition categories.
//! Text lengths are spread so most draws have distinct character counts,
//! but every ninth entry repeats the previous entry's length, giving the
//! duplicate-count filter real material to reject.

use crate::engine::{Item, ItemLevel};
use crate::gen::{GenError, ItemPool};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

const SYLLABLES: &[&str] = &[
    "ba", "re", "mi", "to", "lu", "ke", "zo", "na", "si", "du", "pa", "vo", "ti", "ga", "my",
];

const LOCATIONS: &[&str] = &["Africa", "Asia", "Europe", "South America", "Oceania"];
const COUNTRIES: &[&str] = &["France", "Japan", "Brazil", "Canada", "Kenya"];
const COLORS: &[&str] = &["red", "blue", "green", "yellow"];
const TYPES: &[&str] = &["classic", "compact", "premium"];
const GENRES: &[&str] = &["drama", "comedy", "thriller", "documentary"];
const CATEGORIES: &[&str] = &["fruits", "tools", "animals", "vehicles", "instruments"];

/// A pronounceable word of exactly `len` characters, varied by `stream`.
fn word(stream: usize, len: usize) -> String {
    let mut s = String::with_capacity(len + 2);
    let mut k = stream;
    while s.len() < len {
        s.push_str(SYLLABLES[k % SYLLABLES.len()]);
        k += 7;
    }
    s.truncate(len);
    s
}

/// Token text of exactly `len` characters (1–2 words, space included).
fn token_text(i: usize, len: usize) -> String {
    if len <= 12 {
        word(i, len)
    } else {
        let first = len / 2;
        format!("{} {}", word(i, first), word(i + 3, len - first - 1))
    }
}

/// Paragraph text padded to exactly `len` characters.
fn paragraph_text(i: usize, len: usize) -> String {
    let subject = word(i, 7);
    let verb = ["describes", "reviews", "summarizes", "documents"][i % 4];
    let object = word(i + 5, 9);
    let mut text = format!(
        "The {} report {} the {} project and lists the findings gathered by the field team",
        subject, verb, object
    );
    while text.chars().count() < len {
        let remaining = len - text.chars().count();
        if remaining == 1 {
            text.push('s');
        } else {
            let w = (remaining - 1).min(9);
            text.push(' ');
            text.push_str(&word(i + text.len(), w));
        }
    }
    text
}

fn date(year: i32, month: usize, day: usize) -> Scalar {
    Scalar::from_text(&format!(
        "{:04}-{:02}-{:02}",
        year,
        1 + month % 12,
        1 + day % 28
    ))
}

/// Build a deterministic pool of `size` entries for one item level.
///
/// Token entries carry location, birthday, size, height, color, type,
/// category, and score labels; paragraph entries swap birthday/height for
/// country of citizenship, deadline, publication date, and genre. Roughly
/// four of five entries are eligible for positional samples.
pub fn synth_pool(level: ItemLevel, size: usize, seed: u64) -> Result<ItemPool, GenError> {
    assert!(size >= 7, "pool must cover the largest item draw");
    let salt = (seed % 1000) as usize;
    let mut entries = Vec::with_capacity(size);
    for i in 0..size {
        let stream = i + salt;
        // Lengths cycle through a wide band; every ninth entry repeats the
        // previous length to seed char-count collisions.
        let len_slot = if i % 9 == 8 { i - 1 } else { i };
        let mut attributes: BTreeMap<String, Scalar> = BTreeMap::new();
        attributes.insert(
            "location".into(),
            Scalar::Text(LOCATIONS[stream % 5].into()),
        );
        attributes.insert("size".into(), Scalar::Number((3 + 2 * i) as f64));
        attributes.insert("color".into(), Scalar::Text(COLORS[stream % 4].into()));
        attributes.insert("type".into(), Scalar::Text(TYPES[stream % 3].into()));
        attributes.insert(
            "category".into(),
            Scalar::Text(CATEGORIES[stream % 5].into()),
        );
        attributes.insert("score".into(), Scalar::Number((5 + 7 * i) as f64));

        let (id, text) = match level {
            ItemLevel::Token => {
                let len = 3 + (len_slot * 5) % 44;
                attributes.insert(
                    "birthday".into(),
                    date(1900 + (i as i32 % 120), stream * 5, stream * 7),
                );
                attributes.insert("height".into(), Scalar::Number((10 + 3 * i) as f64));
                (format!("tok-{:03}", i), token_text(stream, len))
            }
            ItemLevel::Paragraph => {
                let len = 120 + (len_slot * 17) % 260;
                attributes.insert(
                    "country of citizenship".into(),
                    Scalar::Text(COUNTRIES[stream % 5].into()),
                );
                attributes.insert(
                    "deadline".into(),
                    date(2020 + (i as i32 % 8), stream * 5 + 1, stream * 3),
                );
                attributes.insert(
                    "publication_date".into(),
                    Scalar::from_text(&format!("{}", 1900 + i % 120)),
                );
                attributes.insert("genre".into(), Scalar::Text(GENRES[stream % 4].into()));
                (format!("par-{:03}", i), paragraph_text(stream, len))
            }
        };
        entries.push(Item {
            id,
            text,
            level,
            attributes,
            positional_ok: i % 5 != 4,
        });
    }
    ItemPool::from_entries(level, entries)
}
