//! Initial query generation and the multi-round, error-guided correction
//! loop.
//!
//! A question is answered by asking the model for a query (sampled several
//! times and voted on by executed answer). While the chosen query fails with
//! a typed error, the model is shown the wrong query and the error message
//! and asked for an analysis followed by a corrected query, up to a fixed
//! number of rounds. Every step is recorded in a [`CorrectionTrace`].

mod demos;
mod prompt;

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::answer::denotation_match;
use crate::dsl::{parse_plan, FunctionRegistry};
use crate::epm::EpmError;
use crate::executor::{run_query, ExecConfig, ExecutionOutcome};
use crate::graph::{ConditionGraph, Scalar, SchemaDescriptor};
use crate::llm::{flatten_messages, ChatClient, ClientError};

pub use demos::{jaccard, retrieve_demos, retrieve_demos_by, CorrectionExample, Demonstration};
pub use prompt::{build_correction_prompt, build_correction_prompt_with_history, build_query_prompt, Attempt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "question")]
    pub text: String,
    #[serde(default)]
    pub gold: Option<Vec<Scalar>>,
    #[serde(default)]
    pub graph_ref: String,
}

/// Which model wrote the initial query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Author {
    #[default]
    Teacher,
    Student,
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Author::Teacher => "teacher",
            Author::Student => "student",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    SolvedDirect,
    SolvedAfterN,
    FailedMct,
    FailedGoldMismatch,
}

impl TraceStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, TraceStatus::SolvedDirect | TraceStatus::SolvedAfterN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRound {
    /// 1-based.
    pub index: usize,
    /// The error being corrected: the previous round's error, or the initial
    /// query's error for round 1.
    pub error_in: EpmError,
    /// Flattened correction prompt sent this round.
    pub prompt: String,
    pub analysis: String,
    pub updated_plan_text: String,
    pub outcome_after: ExecutionOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub id: String,
    pub question: Question,
    pub author: Author,
    /// Flattened query-generation prompt.
    pub query_prompt: String,
    pub initial_plan_text: String,
    pub initial_outcome: ExecutionOutcome,
    pub rounds: Vec<CorrectionRound>,
    pub status: TraceStatus,
    pub n: usize,
    /// Canonical text of the last query, present when it ran cleanly.
    pub final_plan_text: Option<String>,
    /// `None` when the question has no gold answer.
    pub gold_match: Option<bool>,
}

impl CorrectionTrace {
    pub fn final_outcome(&self) -> &ExecutionOutcome {
        self.rounds.last().map_or(&self.initial_outcome, |r| &r.outcome_after)
    }

    /// The query written before round `i` (1-based): the initial query for
    /// round 1, otherwise round `i - 1`'s update.
    pub fn attempt_before(&self, round: usize) -> &str {
        if round <= 1 {
            &self.initial_plan_text
        } else {
            &self.rounds[round - 2].updated_plan_text
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Maximum correction rounds.
    pub mct: usize,
    pub query_demos: usize,
    pub correction_demos: usize,
    pub retrieves: usize,
    pub self_consistency: usize,
    pub strict_empty: bool,
    /// List every earlier attempt in the correction prompt, not just the last.
    pub full_history: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            mct: 3,
            query_demos: 8,
            correction_demos: 8,
            retrieves: 15,
            self_consistency: 5,
            strict_empty: false,
            full_history: false,
        }
    }
}

impl LoopConfig {
    pub fn exec_config(&self) -> ExecConfig {
        ExecConfig {
            strict_empty: self.strict_empty,
        }
    }
}

/// Everything a question is answered against.
#[derive(Debug, Clone, Copy)]
pub struct QaContext<'a> {
    pub graph: &'a ConditionGraph,
    pub schema: &'a SchemaDescriptor,
    pub registry: &'a FunctionRegistry,
    pub demos: &'a [Demonstration],
}

#[derive(Debug, thiserror::Error)]
pub enum LoopError {
    #[error("question {0} has empty text")]
    EmptyQuestion(String),
    #[error("self-consistency needs at least one sample")]
    NoSamples,
    #[error(transparent)]
    Client(#[from] ClientError),
}

static STEP_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*query\d+\s*=").unwrap());

/// A model reply split into its analysis and its query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub analysis: String,
    /// `None` when no line starts a step.
    pub plan_text: Option<String>,
}

/// Analysis is the text before the first `queryN =` line; the query is the
/// run of step lines from there. Code fences are ignored, and a trailing
/// "Corrected query:" label is dropped from the analysis.
pub fn parse_completion(text: &str) -> Completion {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with("```")).collect();
    let Some(start) = lines.iter().position(|l| STEP_LINE.is_match(l)) else {
        return Completion {
            analysis: text.trim().to_string(),
            plan_text: None,
        };
    };
    let mut analysis: Vec<&str> = lines[..start].to_vec();
    while analysis.last().is_some_and(|l| l.trim().is_empty()) {
        analysis.pop();
    }
    if analysis
        .last()
        .is_some_and(|l| l.trim().eq_ignore_ascii_case("corrected query:"))
    {
        analysis.pop();
    }
    let mut analysis = analysis.join("\n").trim().to_string();
    if let Some(rest) = analysis.strip_prefix("Analysis:") {
        analysis = rest.trim().to_string();
    }
    let plan: Vec<&str> = lines[start..]
        .iter()
        .take_while(|l| STEP_LINE.is_match(l))
        .map(|l| l.trim())
        .collect();
    Completion {
        analysis,
        plan_text: Some(plan.join("\n")),
    }
}

/// Runs the query found in a completion. A completion without a query is a
/// non-standard expression error.
pub fn execute_completion(completion: &Completion, raw: &str, ctx: &QaContext<'_>, cfg: &LoopConfig) -> (String, ExecutionOutcome) {
    match &completion.plan_text {
        Some(plan) => (plan.clone(), run_query(plan, ctx.registry, ctx.graph, &cfg.exec_config())),
        None => {
            let first = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
            (raw.trim().to_string(), ExecutionOutcome::rejected(EpmError::non_standard(first)))
        }
    }
}

/// The chosen initial query.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialQuery {
    pub prompt: String,
    pub plan_text: String,
    pub outcome: ExecutionOutcome,
    /// Which sample won the vote, 0-based.
    pub chosen: usize,
    pub samples: usize,
}

fn vote_key(outcome: &ExecutionOutcome) -> Option<String> {
    outcome
        .answer
        .as_ref()
        .filter(|_| outcome.is_success())
        .map(|a| serde_json::to_string(a).expect("scalars serialize"))
}

/// Index of the winning sample: the largest answer bucket (all errors form
/// one bucket), ties going to the bucket whose first member came earliest.
pub fn majority_vote(outcomes: &[ExecutionOutcome]) -> Option<usize> {
    let mut buckets: Vec<(Option<String>, usize, usize)> = Vec::new();
    let mut index: HashMap<Option<String>, usize> = HashMap::new();
    for (i, o) in outcomes.iter().enumerate() {
        let key = vote_key(o);
        match index.get(&key) {
            Some(&b) => buckets[b].2 += 1,
            None => {
                index.insert(key.clone(), buckets.len());
                buckets.push((key, i, 1));
            }
        }
    }
    let best = buckets.iter().map(|b| b.2).max()?;
    buckets.iter().find(|b| b.2 == best).map(|b| b.1)
}

/// Samples `cfg.self_consistency` completions for the query prompt and keeps
/// the one the majority agrees with.
pub fn generate_initial(
    question: &Question,
    ctx: &QaContext<'_>,
    client: &dyn ChatClient,
    cfg: &LoopConfig,
) -> Result<InitialQuery, LoopError> {
    if question.text.trim().is_empty() {
        return Err(LoopError::EmptyQuestion(question.id.clone()));
    }
    if cfg.self_consistency == 0 {
        return Err(LoopError::NoSamples);
    }
    let demos = retrieve_demos(&question.text, ctx.demos, cfg.retrieves, cfg.query_demos);
    let messages = build_query_prompt(&question.text, ctx.schema, ctx.registry, &demos);
    let mut samples = Vec::with_capacity(cfg.self_consistency);
    for _ in 0..cfg.self_consistency {
        let raw = client.chat(&messages)?;
        let completion = parse_completion(&raw);
        samples.push(execute_completion(&completion, &raw, ctx, cfg));
    }
    let outcomes: Vec<ExecutionOutcome> = samples.iter().map(|s| s.1.clone()).collect();
    let chosen = majority_vote(&outcomes).expect("at least one sample");
    let n = samples.len();
    let (plan_text, outcome) = samples.swap_remove(chosen);
    Ok(InitialQuery {
        prompt: flatten_messages(&messages),
        plan_text,
        outcome,
        chosen,
        samples: n,
    })
}

fn canonical(plan_text: &str) -> String {
    parse_plan(plan_text).map_or_else(|_| plan_text.trim().to_string(), |p| p.render())
}

/// Runs the loop with one client for both the initial query and corrections.
pub fn run_correction(
    question: &Question,
    ctx: &QaContext<'_>,
    client: &dyn ChatClient,
    cfg: &LoopConfig,
) -> Result<CorrectionTrace, LoopError> {
    run_correction_with(question, ctx, client, client, Author::Teacher, cfg)
}

/// Runs the loop with `initial` writing the first query and `corrector`
/// handling every correction round.
pub fn run_correction_with(
    question: &Question,
    ctx: &QaContext<'_>,
    initial: &dyn ChatClient,
    corrector: &dyn ChatClient,
    author: Author,
    cfg: &LoopConfig,
) -> Result<CorrectionTrace, LoopError> {
    let first = generate_initial(question, ctx, initial, cfg)?;
    let correction_demos: Vec<Demonstration> = ctx.demos.iter().filter(|d| d.correction.is_some()).cloned().collect();
    let demos = retrieve_demos(&question.text, &correction_demos, cfg.retrieves, cfg.correction_demos);

    let mut rounds: Vec<CorrectionRound> = Vec::new();
    let mut current_plan = first.plan_text.clone();
    let mut current = first.outcome.clone();
    while let Some(error) = current.error.clone() {
        if rounds.len() >= cfg.mct {
            break;
        }
        let messages = if cfg.full_history {
            let mut earlier = Vec::new();
            if !rounds.is_empty() {
                earlier.push(Attempt {
                    plan_text: &first.plan_text,
                    error: first.outcome.error.as_ref().expect("initial query failed"),
                });
            }
            for r in rounds.iter().take(rounds.len().saturating_sub(1)) {
                earlier.push(Attempt {
                    plan_text: &r.updated_plan_text,
                    error: r.outcome_after.error.as_ref().expect("round failed"),
                });
            }
            build_correction_prompt_with_history(
                &question.text,
                ctx.schema,
                ctx.registry,
                &earlier,
                &current_plan,
                &error,
                &demos,
            )
        } else {
            build_correction_prompt(&question.text, ctx.schema, ctx.registry, &current_plan, &error, &demos)
        };
        let raw = corrector.chat(&messages)?;
        let completion = parse_completion(&raw);
        let (plan_text, outcome) = execute_completion(&completion, &raw, ctx, cfg);
        rounds.push(CorrectionRound {
            index: rounds.len() + 1,
            error_in: error,
            prompt: flatten_messages(&messages),
            analysis: completion.analysis,
            updated_plan_text: plan_text.clone(),
            outcome_after: outcome.clone(),
        });
        current_plan = plan_text;
        current = outcome;
    }

    let n = rounds.len();
    let clean = current.error.is_none();
    let gold_match = match (&question.gold, clean) {
        (Some(gold), true) => Some(denotation_match(current.answer.as_deref().unwrap_or(&[]), gold)),
        (Some(_), false) => Some(false),
        (None, _) => None,
    };
    let status = if !clean {
        TraceStatus::FailedMct
    } else if gold_match == Some(false) {
        TraceStatus::FailedGoldMismatch
    } else if n == 0 {
        TraceStatus::SolvedDirect
    } else {
        TraceStatus::SolvedAfterN
    };
    Ok(CorrectionTrace {
        id: format!("{}#{author}", question.id),
        question: question.clone(),
        author,
        query_prompt: first.prompt,
        initial_plan_text: first.plan_text,
        initial_outcome: first.outcome,
        rounds,
        status,
        n,
        final_plan_text: clean.then(|| canonical(&current_plan)),
        gold_match,
    })
}
