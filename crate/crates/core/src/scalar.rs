//! Attribute values attached to items: text, numbers, and calendar dates.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering as CmpOrdering;
use std::fmt;

/// An ISO-8601 date (`YYYY-MM-DD`) or a bare year (`YYYY`).
///
/// Year-only values compare as January 1st of that year. The original
/// spelling is kept for rendering and serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateValue {
    raw: String,
    year: i32,
    month: u8,
    day: u8,
}

impl DateValue {
    /// Parse `YYYY`, `YYYY-MM`, or `YYYY-MM-DD`. Returns `None` on anything else.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let mut parts = s.split('-');
        let year_str = parts.next()?;
        if year_str.len() != 4 || !year_str.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let year: i32 = year_str.parse().ok()?;
        let mut month = 0u8;
        let mut day = 0u8;
        if let Some(m) = parts.next() {
            if m.len() != 2 || !m.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            month = m.parse().ok()?;
            if !(1..=12).contains(&month) {
                return None;
            }
            if let Some(d) = parts.next() {
                if d.len() != 2 || !d.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                day = d.parse().ok()?;
                if !(1..=31).contains(&day) {
                    return None;
                }
            }
        }
        if parts.next().is_some() {
            return None;
        }
        Some(DateValue {
            raw: s.to_string(),
            year,
            month,
            day,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Comparison key; unspecified month/day count as January 1st.
    pub fn sort_key(&self) -> (i32, u8, u8) {
        (self.year, self.month.max(1), self.day.max(1))
    }
}

impl PartialOrd for DateValue {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for DateValue {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.raw.cmp(&other.raw))
    }
}

impl fmt::Display for DateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// A single attribute value.
///
/// JSON numbers load as `Number`; JSON strings that look like dates load as
/// `Date`, everything else as `Text`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Text(String),
    Number(f64),
    Date(DateValue),
}

impl Scalar {
    /// Classify a string the same way deserialization does.
    pub fn from_text(s: &str) -> Self {
        match DateValue::parse(s) {
            Some(d) => Scalar::Date(d),
            None => Scalar::Text(s.to_string()),
        }
    }

    /// Numeric view. `Text` values may carry a unit suffix ("12 cm"); the
    /// leading decimal is used and the suffix ignored.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            Scalar::Text(s) => leading_decimal(s),
            Scalar::Date(_) => None,
        }
    }

    pub fn as_date(&self) -> Option<DateValue> {
        match self {
            Scalar::Date(d) => Some(d.clone()),
            Scalar::Text(s) => DateValue::parse(s),
            Scalar::Number(_) => None,
        }
    }

    /// The surface spelling used when a slot value is rendered into a template.
    pub fn render(&self) -> String {
        match self {
            Scalar::Text(s) => s.clone(),
            Scalar::Number(n) => format_number(*n),
            Scalar::Date(d) => d.raw().to_string(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parse a leading decimal literal, tolerating a trailing unit suffix
/// separated by whitespace ("12", "12.5", "12 cm").
pub fn leading_decimal(s: &str) -> Option<f64> {
    let s = s.trim();
    let head = s.split_whitespace().next()?;
    head.parse::<f64>().ok()
}

/// Render a float without a trailing `.0` for whole values.
pub fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{}", n)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Text(s) => serializer.serialize_str(s),
            Scalar::Number(n) => serializer.serialize_f64(*n),
            Scalar::Date(d) => serializer.serialize_str(d.raw()),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScalarVisitor;
        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a string or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
                Ok(Scalar::from_text(v))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar::Number(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::Number(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
                Ok(Scalar::Number(v as f64))
            }
        }
        deserializer.deserialize_any(ScalarVisitor)
    }
}
