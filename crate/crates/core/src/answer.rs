//! Comparing executed answers with gold answers.
//!
//! Each value is reduced to a [`NormAnswer`]: numbers (and text that reads as
//! a number) compare numerically within 1e-9; everything else is case-folded
//! with punctuation removed and whitespace collapsed.

use crate::graph::scalar::parse_number;
use crate::graph::Scalar;

pub const NUMERIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum NormAnswer {
    Number(f64),
    Text(String),
}

impl NormAnswer {
    pub fn matches(&self, other: &NormAnswer) -> bool {
        match (self, other) {
            (NormAnswer::Number(a), NormAnswer::Number(b)) => (a - b).abs() <= NUMERIC_TOLERANCE,
            (NormAnswer::Text(a), NormAnswer::Text(b)) => a == b,
            _ => false,
        }
    }
}

pub fn normalize_answer(value: &Scalar) -> NormAnswer {
    if let Scalar::Number(n) = value {
        return NormAnswer::Number(*n);
    }
    let text = value.to_string();
    if let Some(n) = parse_number(text.trim()) {
        return NormAnswer::Number(n);
    }
    let folded: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    NormAnswer::Text(folded.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn covers(a: &[NormAnswer], b: &[NormAnswer]) -> bool {
    a.iter().all(|x| b.iter().any(|y| x.matches(y)))
}

/// Denotation match: the two answers are equal as sets after normalization.
pub fn denotation_match(answer: &[Scalar], gold: &[Scalar]) -> bool {
    let a: Vec<NormAnswer> = answer.iter().map(normalize_answer).collect();
    let g: Vec<NormAnswer> = gold.iter().map(normalize_answer).collect();
    covers(&a, &g) && covers(&g, &a)
}

/// The answer's top element: the lexicographically first display string.
pub fn top_answer(answer: &[Scalar]) -> Option<&Scalar> {
    answer.iter().min_by(|a, b| a.to_string().cmp(&b.to_string()).then_with(|| a.cmp(b)))
}

/// Hits@1: the top element is in the gold set.
pub fn hit_at_1(answer: &[Scalar], gold: &[Scalar]) -> bool {
    let Some(top) = top_answer(answer) else {
        return false;
    };
    let top = normalize_answer(top);
    gold.iter().any(|g| normalize_answer(g).matches(&top))
}
