use std::sync::LazyLock;

use regex::Regex;

use super::{Arg, ArgValue, DslFailure, Literal, QueryPlan, QueryStep};
use crate::epm::{classify, EpmError};
use crate::graph::Comparator;

static STEP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*query(\d+)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$").unwrap()
});
static ARG_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>=|=|<|>)\s*(.*?)\s*$").unwrap());
static CALL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\(").unwrap());
static NUM_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^-?\d+(\.\d+)?$").unwrap());
static REF_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^output_of_query(\d+)$").unwrap());

/// Parses query text into a structurally well-formed plan.
///
/// Blank lines are skipped. The first failure in reading order is returned.
pub fn parse_plan(text: &str) -> Result<QueryPlan, EpmError> {
    parse_raw(text).map_err(classify)
}

pub(crate) fn parse_raw(text: &str) -> Result<QueryPlan, DslFailure> {
    let mut steps = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        steps.push(parse_step(line, steps.len() + 1)?);
    }
    if steps.is_empty() {
        return Err(DslFailure::EmptyQuery);
    }
    Ok(QueryPlan {
        steps,
        raw_text: text.to_string(),
    })
}

fn parse_step(line: &str, expected: usize) -> Result<QueryStep, DslFailure> {
    let caps = STEP_RE.captures(line).ok_or_else(|| DslFailure::MalformedStep {
        text: line.trim().to_string(),
    })?;
    let number: Option<usize> = caps[1].parse().ok();
    if number != Some(expected) {
        return Err(DslFailure::StepNumber {
            expected,
            text: format!("query{}", &caps[1]),
        });
    }
    let function = caps[2].to_string();
    let pieces = split_args(&caps[3]).ok_or_else(|| DslFailure::MalformedStep {
        text: line.trim().to_string(),
    })?;
    let mut args = Vec::with_capacity(pieces.len());
    for piece in pieces {
        args.push(parse_arg(&function, piece)?);
    }
    Ok(QueryStep {
        index: expected,
        function,
        args,
    })
}

/// Splits on top-level commas, respecting quotes and brackets. `None` when
/// quotes or brackets are unbalanced.
fn split_args(inner: &str) -> Option<Vec<&str>> {
    if inner.trim().is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth: i32 = 0;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '\'' | '"' => quote = Some(c),
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => {
                    depth -= 1;
                    if depth < 0 {
                        return None;
                    }
                }
                ',' if depth == 0 => {
                    out.push(&inner[start..i]);
                    start = i + 1;
                }
                _ => {}
            },
        }
    }
    if quote.is_some() || depth != 0 {
        return None;
    }
    out.push(&inner[start..]);
    Some(out)
}

fn parse_arg(function: &str, piece: &str) -> Result<Arg, DslFailure> {
    let caps = ARG_RE.captures(piece).ok_or_else(|| DslFailure::UnparsableValue {
        text: piece.trim().to_string(),
    })?;
    let comparator = Comparator::from_symbol(&caps[2]).expect("regex admits only known comparators");
    let value = parse_value(function, &caps[3])?;
    Ok(Arg {
        name: caps[1].to_string(),
        comparator,
        value,
    })
}

fn parse_value(function: &str, raw: &str) -> Result<ArgValue, DslFailure> {
    if let Some(c) = CALL_RE.captures(raw) {
        return Err(DslFailure::NestedCall {
            outer: function.to_string(),
            inner: c[1].to_string(),
        });
    }
    if let Some(c) = REF_RE.captures(raw) {
        if let Ok(n) = c[1].parse() {
            return Ok(ArgValue::StepRef(n));
        }
    }
    if NUM_RE.is_match(raw) {
        if let Ok(n) = raw.parse::<f64>() {
            if n.is_finite() {
                return Ok(ArgValue::Literal(Literal::Number(if n == 0.0 { 0.0 } else { n })));
            }
        }
    }
    for q in ['\'', '"'] {
        if raw.len() >= 2 && raw.starts_with(q) && raw.ends_with(q) {
            let body = &raw[1..raw.len() - 1];
            if !body.contains(q) {
                return Ok(ArgValue::Literal(Literal::Text(body.to_string())));
            }
        }
    }
    Err(DslFailure::UnparsableValue {
        text: raw.to_string(),
    })
}
