//! Graph terms: URI references, blank nodes and literals, plus the scalar
//! interpretation used when literals are compared.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Uri,
    Blank,
    Literal,
}

/// A graph term. Identity is the `(kind, id)` pair; ordering is by `id`
/// first so that node-id sequences sort the way users read them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub id: String,
}

impl NodeId {
    pub fn uri(id: impl Into<String>) -> Self {
        Self {
            kind: NodeKind::Uri,
            id: id.into(),
        }
    }

    pub fn blank(id: impl Into<String>) -> Self {
        Self {
            kind: NodeKind::Blank,
            id: id.into(),
        }
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Self {
            kind: NodeKind::Literal,
            id: value.into(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.id
    }

    pub fn is_literal(&self) -> bool {
        self.kind == NodeKind::Literal
    }

    /// Predicates whose name starts with `@` carry attributes.
    pub fn is_attribute_predicate(&self) -> bool {
        self.kind == NodeKind::Uri && self.id.starts_with('@')
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id).then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// An instant with millisecond precision, always normalized to UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Timestamp(DateTime<Utc>);

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

const DATE_FORMATS: &[&str] = &["%Y-%m-%d", "%d-%m-%Y", "%d/%m/%Y"];

impl Timestamp {
    /// Parses ISO-8601 style instants. A missing zone means UTC; bare dates
    /// mean midnight. Day-first dates (`01-12-2017`) are accepted as well.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.len() < 8 || !text.as_bytes()[0].is_ascii_digit() {
            return None;
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
            return Some(Self::from_utc(dt.with_timezone(&Utc)));
        }
        for fmt in NAIVE_FORMATS {
            if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
                return Some(Self::from_utc(Utc.from_utc_datetime(&naive)));
            }
        }
        for fmt in DATE_FORMATS {
            if let Ok(date) = NaiveDate::parse_from_str(text, fmt) {
                let naive = date.and_hms_opt(0, 0, 0)?;
                return Some(Self::from_utc(Utc.from_utc_datetime(&naive)));
            }
        }
        None
    }

    /// Parses with an explicit chrono format string, falling back to
    /// [`Timestamp::parse`] when the format carries no time fields.
    pub fn parse_with(text: &str, format: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(dt) = DateTime::parse_from_str(text, format) {
            return Some(Self::from_utc(dt.with_timezone(&Utc)));
        }
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, format) {
            return Some(Self::from_utc(Utc.from_utc_datetime(&naive)));
        }
        if let Ok(date) = NaiveDate::parse_from_str(text, format) {
            let naive = date.and_hms_opt(0, 0, 0)?;
            return Some(Self::from_utc(Utc.from_utc_datetime(&naive)));
        }
        None
    }

    pub fn now() -> Self {
        Self::from_utc(Utc::now())
    }

    pub fn from_millis(millis: i64) -> Option<Self> {
        Utc.timestamp_millis_opt(millis).single().map(Self)
    }

    pub fn millis(&self) -> i64 {
        self.0.timestamp_millis()
    }

    fn from_utc(dt: DateTime<Utc>) -> Self {
        // truncate to millisecond precision
        Self::from_millis(dt.timestamp_millis()).unwrap_or(Self(dt))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Millis, true))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Timestamp::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("bad instant '{text}'")))
    }
}

/// Scalar reading of a literal's lexical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar<'a> {
    Integer(i64),
    Decimal(f64),
    Instant(Timestamp),
    Text(&'a str),
}

impl<'a> Scalar<'a> {
    pub fn infer(text: &'a str) -> Self {
        let trimmed = text.trim();
        if let Ok(i) = trimmed.parse::<i64>() {
            return Scalar::Integer(i);
        }
        if looks_decimal(trimmed) {
            if let Ok(d) = trimmed.parse::<f64>() {
                if d.is_finite() {
                    return Scalar::Decimal(d);
                }
            }
        }
        if let Some(ts) = Timestamp::parse(trimmed) {
            return Scalar::Instant(ts);
        }
        Scalar::Text(text)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Scalar::Integer(i) => Some(i as f64),
            Scalar::Decimal(d) => Some(d),
            _ => None,
        }
    }
}

// `f64::from_str` also accepts "inf", "NaN" and friends; only plain decimals count.
fn looks_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    !body.is_empty()
        && body.bytes().any(|b| b.is_ascii_digit())
        && body
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'-' | b'+'))
}

/// Compares two lexical values: numerically when both are numbers, as
/// instants when both are instants, and lexicographically otherwise.
pub fn compare_values(a: &str, b: &str) -> Ordering {
    match (Scalar::infer(a), Scalar::infer(b)) {
        (Scalar::Integer(x), Scalar::Integer(y)) => x.cmp(&y),
        (Scalar::Instant(x), Scalar::Instant(y)) => x.cmp(&y),
        (x, y) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
            _ => a.cmp(b),
        },
    }
}

pub fn values_equal(a: &str, b: &str) -> bool {
    a == b || compare_values(a, b) == Ordering::Equal
}
