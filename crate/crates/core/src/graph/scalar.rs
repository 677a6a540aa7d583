//! Scalar values stored on graph edges and produced by query steps.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Trim and case-fold a label. Idempotent.
pub fn normalize(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Kind tag fixed on a tail value at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Text,
    Numeric,
    Date,
}

/// A calendar value with year, month or day precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateValue {
    pub year: i32,
    pub month: Option<u32>,
    pub day: Option<u32>,
}

impl DateValue {
    pub fn year(year: i32) -> Self {
        Self {
            year,
            month: None,
            day: None,
        }
    }

    /// Parses `YYYY`, `YYYY-MM` or `YYYY-MM-DD`. Month/day forms must name a
    /// real calendar date.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let parts: Vec<&str> = text.split('-').collect();
        let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        match parts.as_slice() {
            [y] if all_digits(y) && y.len() <= 4 => y.parse().ok().map(Self::year),
            [y, m] if all_digits(y) && y.len() == 4 && all_digits(m) && m.len() == 2 => {
                let year: i32 = y.parse().ok()?;
                let month: u32 = m.parse().ok()?;
                NaiveDate::from_ymd_opt(year, month, 1)?;
                Some(Self {
                    year,
                    month: Some(month),
                    day: None,
                })
            }
            [y, m, d]
                if all_digits(y)
                    && y.len() == 4
                    && all_digits(m)
                    && m.len() == 2
                    && all_digits(d)
                    && d.len() == 2 =>
            {
                let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
                use chrono::Datelike;
                Some(Self {
                    year: date.year(),
                    month: Some(date.month()),
                    day: Some(date.day()),
                })
            }
            _ => None,
        }
    }

    fn sort_key(&self) -> (i32, u32, u32) {
        (self.year, self.month.unwrap_or(0), self.day.unwrap_or(0))
    }

    /// Compares at the coarser of the two precisions, so `1999` equals
    /// `1999-03-01` and precedes `2000-01-01`.
    pub fn cmp_coarse(&self, other: &Self) -> Ordering {
        let ord = self.year.cmp(&other.year);
        if ord != Ordering::Equal {
            return ord;
        }
        match (self.month, other.month) {
            (Some(a), Some(b)) => match a.cmp(&b) {
                Ordering::Equal => match (self.day, other.day) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    _ => Ordering::Equal,
                },
                ord => ord,
            },
            _ => Ordering::Equal,
        }
    }
}

impl Ord for DateValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for DateValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
            if let Some(d) = self.day {
                write!(f, "-{d:02}")?;
            }
        }
        Ok(())
    }
}

/// A text, numeric or date value.
#[derive(Debug, Clone)]
pub enum Scalar {
    Text(String),
    Number(f64),
    Date(DateValue),
}

impl Scalar {
    /// Numbers are stored finite, with `-0.0` folded into `0.0`.
    pub fn number(value: f64) -> Self {
        debug_assert!(value.is_finite());
        Scalar::Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn text(value: impl Into<String>) -> Self {
        Scalar::Text(value.into())
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Text(_) => ScalarKind::Text,
            Scalar::Number(_) => ScalarKind::Numeric,
            Scalar::Date(_) => ScalarKind::Date,
        }
    }

    /// Kind inference for an ingested cell: numeric if the full cell is a
    /// finite number, date if it is ISO-8601 or a bare year, else text.
    pub fn infer(cell: &str) -> Self {
        let trimmed = cell.trim();
        if let Some(n) = parse_number(trimmed) {
            return Scalar::number(n);
        }
        if let Some(d) = DateValue::parse(trimmed) {
            return Scalar::Date(d);
        }
        Scalar::Text(trimmed.to_string())
    }

    /// Operand type name used in runtime fault messages.
    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Text(_) => "str",
            Scalar::Number(n) if n.fract() == 0.0 => "int",
            Scalar::Number(_) => "float",
            Scalar::Date(_) => "date",
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Normalized text form used for label matching.
    pub fn normalized(&self) -> String {
        normalize(&self.to_string())
    }

    fn rank(&self) -> u8 {
        match self {
            Scalar::Number(_) => 0,
            Scalar::Date(_) => 1,
            Scalar::Text(_) => 2,
        }
    }
}

/// Parses a finite decimal number; rejects `inf`, `nan` and friends.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || t.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E') {
        return None;
    }
    t.parse::<f64>().ok().filter(|n| n.is_finite())
}

pub(crate) fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Text(s) => f.write_str(s),
            Scalar::Number(n) => f.write_str(&format_number(*n)),
            Scalar::Date(d) => d.fmt(f),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Number(a), Scalar::Number(b)) => a.total_cmp(b),
            (Scalar::Date(a), Scalar::Date(b)) => a.cmp(b),
            (Scalar::Text(a), Scalar::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Scalar::Text(s) => s.hash(state),
            Scalar::Number(n) => n.to_bits().hash(state),
            Scalar::Date(d) => d.hash(state),
        }
    }
}

impl From<&str> for Scalar {
    fn from(value: &str) -> Self {
        Scalar::Text(value.to_string())
    }
}

impl From<f64> for Scalar {
    fn from(value: f64) -> Self {
        Scalar::number(value)
    }
}

// Numbers serialize as JSON numbers, everything else as its display string.
impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Number(n) if n.fract() == 0.0 && n.abs() < 1e15 => {
                serializer.serialize_i64(*n as i64)
            }
            Scalar::Number(n) => serializer.serialize_f64(*n),
            other => serializer.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::Number(n) => n
                .as_f64()
                .filter(|v| v.is_finite())
                .map(Scalar::number)
                .ok_or_else(|| D::Error::custom("non-finite number")),
            serde_json::Value::String(s) => Ok(match DateValue::parse(&s) {
                Some(d) if s.contains('-') => Scalar::Date(d),
                _ => Scalar::Text(s),
            }),
            serde_json::Value::Bool(b) => Ok(Scalar::Text(b.to_string())),
            other => Err(D::Error::custom(format!("unsupported scalar {other}"))),
        }
    }
}

/// Rebuilds a scalar from its display form and an explicit kind tag.
pub fn scalar_with_kind(text: &str, kind: ScalarKind) -> Option<Scalar> {
    match kind {
        ScalarKind::Text => Some(Scalar::Text(text.to_string())),
        ScalarKind::Numeric => parse_number(text).map(Scalar::number),
        ScalarKind::Date => DateValue::parse(text).map(Scalar::Date),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_is_idempotent() {
        for s in ["  Alice ", "BOB", "Ünïcode X", "", "\tmixed Case\n"] {
            let once = normalize(s);
            assert_eq!(normalize(&once), once);
        }
    }

    #[test]
    fn kind_inference() {
        assert_eq!(Scalar::infer("20").kind(), ScalarKind::Numeric);
        assert_eq!(Scalar::infer(" 2.5 ").kind(), ScalarKind::Numeric);
        assert_eq!(Scalar::infer("1999-03-01").kind(), ScalarKind::Date);
        assert_eq!(Scalar::infer("1999-02-30").kind(), ScalarKind::Text);
        assert_eq!(Scalar::infer("Utah").kind(), ScalarKind::Text);
        assert_eq!(Scalar::infer("inf").kind(), ScalarKind::Text);
        assert_eq!(Scalar::infer("NaN").kind(), ScalarKind::Text);
    }

    #[test]
    fn type_names_follow_operand_shape() {
        assert_eq!(Scalar::number(20.0).type_name(), "int");
        assert_eq!(Scalar::number(2.5).type_name(), "float");
        assert_eq!(Scalar::text("x").type_name(), "str");
    }

    #[test]
    fn mixed_precision_dates_sort_consistently() {
        // Manual ordering: year-only sorts before any refinement in that year.
        let inputs = [
            "2001-05-02", "1999", "2001", "1999-12-31", "2000-01", "1998-07-04", "2000",
            "2001-05-01", "1999-01-01", "2000-01-15",
        ];
        let expected = [
            "1998-07-04", "1999", "1999-01-01", "1999-12-31", "2000", "2000-01", "2000-01-15",
            "2001", "2001-05-01", "2001-05-02",
        ];
        let mut dates: Vec<DateValue> = inputs.iter().map(|s| DateValue::parse(s).unwrap()).collect();
        dates.sort();
        let rendered: Vec<String> = dates.iter().map(|d| d.to_string()).collect();
        assert_eq!(rendered, expected);
    }

    #[test]
    fn coarse_comparison() {
        let y = DateValue::parse("1999").unwrap();
        let d = DateValue::parse("1999-03-01").unwrap();
        assert_eq!(y.cmp_coarse(&d), Ordering::Equal);
        assert_eq!(d.cmp_coarse(&DateValue::parse("2000").unwrap()), Ordering::Less);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_string(&vec![
            Scalar::number(20.0),
            Scalar::number(2.5),
            Scalar::text("Utah"),
            Scalar::Date(DateValue::parse("1999-03-01").unwrap()),
        ])
        .unwrap();
        assert_eq!(v, r#"[20,2.5,"Utah","1999-03-01"]"#);
        let back: Vec<Scalar> = serde_json::from_str(&v).unwrap();
        assert_eq!(back[3].kind(), ScalarKind::Date);
    }
}
