//! Training data from correction traces, and the losses over it.
//!
//! Stage one is supervised: one query-generation record per solved trace and
//! one correction record per round, every correction target ending in the
//! trace's final query. Stage two pairs the student's final query against
//! each of its earlier failed attempts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::correction::{Author, CorrectionTrace};
use crate::dsl::parse_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    QueryGen,
    Correction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub kind: RecordKind,
    pub input: String,
    pub target: String,
    pub round: Option<usize>,
    pub trace_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub round: usize,
    pub trace_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DistillError {
    #[error("trace {trace_id} is not eligible: {reason}")]
    IneligibleTrace { trace_id: String, reason: String },
    #[error("scorer failed: {0}")]
    ScorerFailure(String),
    #[error("expected {expected:?} records, found {found:?}")]
    WrongRecordKind { expected: RecordKind, found: RecordKind },
}

/// Joins an analysis and a query with one blank line.
pub fn correction_target(analysis: &str, final_plan: &str) -> String {
    let analysis = analysis.trim();
    if analysis.is_empty() {
        final_plan.to_string()
    } else {
        format!("{analysis}\n\n{final_plan}")
    }
}

fn ineligible(trace: &CorrectionTrace, reason: impl Into<String>) -> DistillError {
    DistillError::IneligibleTrace {
        trace_id: trace.id.clone(),
        reason: reason.into(),
    }
}

fn solved_plan(trace: &CorrectionTrace) -> Result<&str, DistillError> {
    if !trace.status.is_solved() {
        return Err(ineligible(trace, format!("status {:?}", trace.status)));
    }
    if trace.gold_match != Some(true) {
        return Err(ineligible(trace, "final answer not confirmed against gold"));
    }
    trace
        .final_plan_text
        .as_deref()
        .ok_or_else(|| ineligible(trace, "no final query"))
}

/// Stage-one records: one query-generation record plus one correction record
/// per round.
pub fn teacher_records(trace: &CorrectionTrace) -> Result<Vec<SftRecord>, DistillError> {
    let final_plan = solved_plan(trace)?;
    let mut out = vec![SftRecord {
        kind: RecordKind::QueryGen,
        input: trace.query_prompt.clone(),
        target: final_plan.to_string(),
        round: None,
        trace_id: trace.id.clone(),
    }];
    for r in &trace.rounds {
        out.push(SftRecord {
            kind: RecordKind::Correction,
            input: r.prompt.clone(),
            target: correction_target(&r.analysis, final_plan),
            round: Some(r.index),
            trace_id: trace.id.clone(),
        });
    }
    Ok(out)
}

fn canonical(plan: &str) -> String {
    parse_plan(plan).map_or_else(|_| plan.trim().to_string(), |p| p.render())
}

/// Stage-two pairs from a student trace: the final query preferred over each
/// earlier attempt, all under the query-generation prompt.
pub fn self_records(trace: &CorrectionTrace) -> Result<Vec<PreferencePair>, DistillError> {
    if trace.author != Author::Student {
        return Err(ineligible(trace, "written by the teacher"));
    }
    let final_plan = solved_plan(trace)?;
    let chosen = canonical(final_plan);
    let mut out = Vec::new();
    for i in 1..=trace.n {
        let rejected = trace.attempt_before(i);
        if canonical(rejected) == chosen {
            continue;
        }
        out.push(PreferencePair {
            prompt: trace.query_prompt.clone(),
            chosen: final_plan.to_string(),
            rejected: rejected.to_string(),
            round: i,
            trace_id: trace.id.clone(),
        });
    }
    Ok(out)
}

/// Records and pairs from every eligible trace; ineligible ones are skipped.
pub fn export(traces: &[CorrectionTrace]) -> (Vec<SftRecord>, Vec<PreferencePair>) {
    let mut sft = Vec::new();
    let mut pairs = Vec::new();
    for t in traces {
        if let Ok(r) = teacher_records(t) {
            sft.extend(r);
        }
        if t.author == Author::Student {
            if let Ok(p) = self_records(t) {
                pairs.extend(p);
            }
        }
    }
    (sft, pairs)
}

/// Per-token log-probabilities of a target given a context.
pub trait TokenScorer: Send + Sync {
    fn token_logprobs(&self, context: &str, target: &str) -> Result<Vec<f64>, DistillError>;
}

/// Whitespace tokens looked up in a table. Whole targets listed under
/// `sequences` take their listed values instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableScorer {
    pub tokens: HashMap<String, f64>,
    /// Used for tokens absent from `tokens`.
    pub default: f64,
    pub sequences: HashMap<String, Vec<f64>>,
}

impl TableScorer {
    pub fn new(tokens: impl IntoIterator<Item = (impl Into<String>, f64)>, default: f64) -> Self {
        Self {
            tokens: tokens.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            default,
            sequences: HashMap::new(),
        }
    }

    pub fn with_sequence(mut self, target: impl Into<String>, logprobs: Vec<f64>) -> Self {
        self.sequences.insert(target.into(), logprobs);
        self
    }
}

impl TokenScorer for TableScorer {
    fn token_logprobs(&self, _context: &str, target: &str) -> Result<Vec<f64>, DistillError> {
        let values: Vec<f64> = match self.sequences.get(target) {
            Some(v) => v.clone(),
            None => target
                .split_whitespace()
                .map(|t| self.tokens.get(t).copied().unwrap_or(self.default))
                .collect(),
        };
        if let Some(bad) = values.iter().find(|v| v.is_nan() || **v > 0.0) {
            return Err(DistillError::ScorerFailure(format!("log-probability {bad} is not <= 0")));
        }
        Ok(values)
    }
}

/// Sum of the target's token log-probabilities.
pub fn score_sequence(context: &str, target: &str, scorer: &dyn TokenScorer) -> Result<f64, DistillError> {
    Ok(scorer.token_logprobs(context, target)?.iter().sum())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Negative summed log-probability.
    #[default]
    Sum,
    /// The sum divided by the number of target tokens.
    TokenMean,
}

/// Negative log-likelihood of the targets of `records`, all of which must be
/// of `kind`.
pub fn sft_loss(
    records: &[SftRecord],
    kind: RecordKind,
    scorer: &dyn TokenScorer,
    reduction: Reduction,
) -> Result<f64, DistillError> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for r in records {
        if r.kind != kind {
            return Err(DistillError::WrongRecordKind {
                expected: kind,
                found: r.kind,
            });
        }
        let lp = scorer.token_logprobs(&r.input, &r.target)?;
        tokens += lp.len();
        total -= lp.iter().sum::<f64>();
    }
    Ok(match reduction {
        Reduction::Sum => total,
        Reduction::TokenMean if tokens == 0 => 0.0,
        Reduction::TokenMean => total / tokens as f64,
    })
}

/// Query-generation loss.
pub fn loss_q(records: &[SftRecord], scorer: &dyn TokenScorer) -> Result<f64, DistillError> {
    sft_loss(records, RecordKind::QueryGen, scorer, Reduction::Sum)
}

/// Correction loss.
pub fn loss_c(records: &[SftRecord], scorer: &dyn TokenScorer) -> Result<f64, DistillError> {
    sft_loss(records, RecordKind::Correction, scorer, Reduction::Sum)
}

pub fn loss_stage1(lq: f64, lc: f64) -> f64 {
    lq + lc
}

/// Preference loss: the negated sum over pairs of the score margin between
/// the chosen and rejected query.
pub fn loss_stage2(pairs: &[PreferencePair], scorer: &dyn TokenScorer) -> Result<f64, DistillError> {
    let mut chosen_cache: HashMap<(&str, &str), f64> = HashMap::new();
    let mut total = 0.0;
    for p in pairs {
        let chosen = match chosen_cache.get(&(p.prompt.as_str(), p.chosen.as_str())) {
            Some(s) => *s,
            None => {
                let s = score_sequence(&p.prompt, &p.chosen, scorer)?;
                chosen_cache.insert((&p.prompt, &p.chosen), s);
                s
            }
        };
        total -= chosen - score_sequence(&p.prompt, &p.rejected, scorer)?;
    }
    Ok(total)
}

/// Splits SFT records by kind, keeping order.
pub fn split_by_kind(records: &[SftRecord]) -> (Vec<SftRecord>, Vec<SftRecord>) {
    records.iter().cloned().partition(|r| r.kind == RecordKind::QueryGen)
}

/// All four losses over one export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_q: f64,
    pub l_c: f64,
    pub l_1: f64,
    pub l_2: f64,
}

pub fn loss_report(
    records: &[SftRecord],
    pairs: &[PreferencePair],
    scorer: &dyn TokenScorer,
) -> Result<LossReport, DistillError> {
    let (q, c) = split_by_kind(records);
    let l_q = loss_q(&q, scorer)?;
    let l_c = loss_c(&c, scorer)?;
    Ok(LossReport {
        l_q,
        l_c,
        l_1: loss_stage1(l_q, l_c),
        l_2: loss_stage2(pairs, scorer)?,
    })
}
