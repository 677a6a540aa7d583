//! Step-by-step execution of validated plans over a condition graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dsl::{ArgValue, QueryStep, ValidatedPlan};
use crate::epm::{classify, EpmError};
use crate::graph::{
    compare_scalar, normalize, Comparator, ConditionGraph, Edge, GraphError, Pattern, QualifierPattern, Scalar,
    ScalarKind,
};

/// A trapped evaluation fault, before classification.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecFault {
    /// Any fault raised while evaluating a function; `fault` is the
    /// operand-level description.
    Operand { function: String, fault: String },
    /// A non-final step (or, in strict mode, any step) produced nothing.
    EmptyMidStep { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    EntitySet,
    ValueSet,
    Scalar,
}

/// Values produced by one step, kept sorted by display text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub index: usize,
    pub kind: ResultKind,
    pub values: Vec<Scalar>,
}

/// Sorts by display text, then by value, and drops duplicates.
pub fn sorted_values(values: impl IntoIterator<Item = Scalar>) -> Vec<Scalar> {
    let set: BTreeSet<Scalar> = values.into_iter().collect();
    let mut out: Vec<Scalar> = set.into_iter().collect();
    out.sort_by(|a, b| a.to_string().cmp(&b.to_string()).then_with(|| a.cmp(b)));
    out
}

impl StepResult {
    pub fn new(index: usize, kind: ResultKind, values: impl IntoIterator<Item = Scalar>) -> Self {
        let values = sorted_values(values);
        debug_assert!(kind != ResultKind::Scalar || values.len() == 1);
        Self { index, kind, values }
    }

    fn set(&self) -> BTreeSet<Scalar> {
        self.values.iter().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Success,
    Error,
}

/// Result of running (or failing to parse) one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: OutcomeStatus,
    pub per_step: Vec<StepResult>,
    pub answer: Option<Vec<Scalar>>,
    pub error: Option<EpmError>,
}

impl ExecutionOutcome {
    /// Outcome for a plan rejected before execution.
    pub fn rejected(error: EpmError) -> Self {
        Self {
            status: OutcomeStatus::Error,
            per_step: Vec::new(),
            answer: None,
            error: Some(error),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == OutcomeStatus::Success
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecConfig {
    /// Also flag an empty final step.
    pub strict_empty: bool,
}

fn fault(function: &str, text: impl Into<String>) -> EpmError {
    classify(ExecFault::Operand {
        function: function.to_string(),
        fault: text.into(),
    })
}

fn kind_type_name(kind: ScalarKind) -> &'static str {
    match kind {
        ScalarKind::Text => "str",
        ScalarKind::Numeric => "int",
        ScalarKind::Date => "date",
    }
}

fn graph_fault(function: &str, err: GraphError, probe: &Scalar) -> EpmError {
    match err {
        GraphError::KindMismatch { comparator, kind } => fault(
            function,
            format!(
                "'{comparator}' not supported between instances of '{}' and '{}'",
                kind_type_name(kind),
                probe.type_name()
            ),
        ),
        other => fault(function, other.to_string()),
    }
}

/// Resolves an argument to the candidate probe values it stands for.
fn resolve(
    function: &str,
    value: &ArgValue,
    cmp: Comparator,
    env: &BTreeMap<usize, StepResult>,
) -> Result<Vec<Scalar>, EpmError> {
    match value {
        ArgValue::Literal(l) => Ok(vec![l.to_scalar()]),
        ArgValue::StepRef(n) => {
            let r = env
                .get(n)
                .ok_or_else(|| fault(function, format!("output_of_query{n} is not available")))?;
            if cmp != Comparator::Eq && r.values.len() != 1 {
                return Err(fault(
                    function,
                    format!("'{cmp}' not supported between instances of 'set' of size {} and a value", r.values.len()),
                ));
            }
            Ok(r.values.clone())
        }
    }
}

fn literal_text(step: &QueryStep, name: &str) -> Option<String> {
    step.arg(name).map(|a| match &a.value {
        ArgValue::Literal(l) => l.to_scalar().to_string(),
        ArgValue::StepRef(n) => format!("output_of_query{n}"),
    })
}

fn set_arg(step: &QueryStep, name: &str, env: &BTreeMap<usize, StepResult>) -> Result<StepResult, EpmError> {
    match step.arg(name).map(|a| &a.value) {
        Some(ArgValue::StepRef(n)) => env
            .get(n)
            .cloned()
            .ok_or_else(|| fault(&step.function, format!("output_of_query{n} is not available"))),
        Some(other) => Err(fault(&step.function, format!("parameter '{name}' expects a set, got {other}"))),
        None => Err(fault(&step.function, format!("missing parameter '{name}'"))),
    }
}

fn get_information(step: &QueryStep, env: &BTreeMap<usize, StepResult>, cg: &ConditionGraph) -> Result<StepResult, EpmError> {
    let f = step.function.as_str();
    let head = match step.arg("head_entity") {
        Some(a) => Some(resolve(f, &a.value, Comparator::Eq, env)?),
        None => None,
    };
    let tail = match step.arg("tail_entity") {
        Some(a) => Some((a.comparator, resolve(f, &a.value, a.comparator, env)?)),
        None => None,
    };
    let value = match step.arg("value") {
        Some(a) => Some((a.comparator, resolve(f, &a.value, a.comparator, env)?)),
        None => None,
    };
    let relation = literal_text(step, "relation");
    let key = literal_text(step, "key");

    let heads: Vec<Option<Scalar>> = head.clone().map_or(vec![None], |v| v.into_iter().map(Some).collect());
    let tails: Vec<Option<(Comparator, Scalar)>> = tail
        .as_ref()
        .map_or(vec![None], |(c, v)| v.iter().map(|s| Some((*c, s.clone()))).collect());
    let values: Vec<Option<(Comparator, Scalar)>> = value
        .as_ref()
        .map_or(vec![None], |(c, v)| v.iter().map(|s| Some((*c, s.clone()))).collect());

    let mut matched: Vec<&Edge> = Vec::new();
    for h in &heads {
        for t in &tails {
            for v in &values {
                let mut p = Pattern {
                    head: h.as_ref().map(ToString::to_string),
                    relation: relation.clone(),
                    ..Pattern::default()
                };
                if let Some((c, s)) = t {
                    p = p.tail_cmp(*c, s.clone());
                }
                if key.is_some() || v.is_some() {
                    p = p.qualifier(QualifierPattern {
                        key: key.clone(),
                        value: v.clone(),
                    });
                }
                let probe = t
                    .as_ref()
                    .or(v.as_ref())
                    .map(|(_, s)| s.clone())
                    .unwrap_or_else(|| Scalar::text(""));
                matched.extend(cg.lookup(&p).map_err(|e| graph_fault(f, e, &probe))?);
            }
        }
    }

    let (kind, out): (ResultKind, Vec<Scalar>) = if key.is_some() && value.is_none() {
        (
            ResultKind::ValueSet,
            matched
                .iter()
                .filter_map(|e| e.qualifier.as_ref().map(|q| q.value.clone()))
                .collect(),
        )
    } else if head.is_some() {
        let tails: Vec<Scalar> = matched.iter().map(|e| e.tail.clone()).collect();
        let kind = if tails.iter().all(|t| t.kind() == ScalarKind::Text) {
            ResultKind::EntitySet
        } else {
            ResultKind::ValueSet
        };
        (kind, tails)
    } else if tail.is_some() || value.is_some() {
        (
            ResultKind::EntitySet,
            matched.iter().map(|e| Scalar::Text(e.head.clone())).collect(),
        )
    } else {
        (ResultKind::ValueSet, matched.iter().map(|e| e.tail.clone()).collect())
    };
    Ok(StepResult::new(step.index, kind, out))
}

fn keep(step: &QueryStep, env: &BTreeMap<usize, StepResult>, cg: &ConditionGraph) -> Result<StepResult, EpmError> {
    let f = step.function.as_str();
    let input = set_arg(step, "set", env)?;
    let key = literal_text(step, "key").unwrap_or_default();
    let arg = step
        .arg("value")
        .ok_or_else(|| fault(f, "missing parameter 'value'"))?;
    let probes = resolve(f, &arg.value, arg.comparator, env)?;
    let mut kept = Vec::new();
    for entity in &input.values {
        let mut hit = false;
        for e in cg.edges_with_entity(&entity.to_string()) {
            let e = cg.edge(*e);
            if normalize(&e.head) != entity.normalized() || normalize(&e.relation) != normalize(&key) {
                continue;
            }
            for p in &probes {
                if compare_scalar(&e.tail, arg.comparator, p).map_err(|err| graph_fault(f, err, p))? {
                    hit = true;
                }
            }
        }
        if hit {
            kept.push(entity.clone());
        }
    }
    Ok(StepResult::new(step.index, ResultKind::EntitySet, kept))
}

fn sum_values(f: &str, values: &BTreeSet<Scalar>) -> Result<Scalar, EpmError> {
    let mut acc = Scalar::number(0.0);
    for v in values {
        match (&acc, v) {
            (Scalar::Number(a), Scalar::Number(b)) => acc = Scalar::number(a + b),
            _ => {
                return Err(fault(
                    f,
                    format!(
                        "unsupported operand type(s) for +: '{}' and '{}'",
                        acc.type_name(),
                        v.type_name()
                    ),
                ))
            }
        }
    }
    Ok(acc)
}

fn extreme(f: &str, values: &BTreeSet<Scalar>, want_max: bool) -> Result<Scalar, EpmError> {
    let mut it = values.iter();
    let first = it
        .next()
        .ok_or_else(|| fault(f, format!("{f}() arg is an empty sequence")))?;
    if first.kind() == ScalarKind::Text {
        return Err(fault(f, format!("{f}() requires numeric or date operands, got 'str'")));
    }
    let mut best = first.clone();
    for v in it {
        if v.kind() != best.kind() {
            return Err(fault(
                f,
                format!(
                    "'<' not supported between instances of '{}' and '{}'",
                    v.type_name(),
                    best.type_name()
                ),
            ));
        }
        let better = if want_max { v > &best } else { v < &best };
        if better {
            best = v.clone();
        }
    }
    Ok(best)
}

fn combined_kind(a: &StepResult, b: &StepResult) -> ResultKind {
    if a.kind == ResultKind::EntitySet && b.kind == ResultKind::EntitySet {
        ResultKind::EntitySet
    } else {
        ResultKind::ValueSet
    }
}

/// Runs one step against already-computed results.
pub fn execute_step(step: &QueryStep, env: &BTreeMap<usize, StepResult>, cg: &ConditionGraph) -> Result<StepResult, EpmError> {
    let f = step.function.as_str();
    let idx = step.index;
    match f {
        "get_information" => get_information(step, env, cg),
        "keep" => keep(step, env, cg),
        "count" => {
            let s = set_arg(step, "set", env)?;
            Ok(StepResult::new(idx, ResultKind::Scalar, [Scalar::number(s.values.len() as f64)]))
        }
        "sum" => {
            let s = set_arg(step, "set", env)?.set();
            Ok(StepResult::new(idx, ResultKind::Scalar, [sum_values(f, &s)?]))
        }
        "mean" => {
            let s = set_arg(step, "set", env)?.set();
            if s.is_empty() {
                return Err(fault(f, "mean() arg is an empty sequence"));
            }
            let total = sum_values(f, &s)?.as_number().expect("sum is numeric");
            Ok(StepResult::new(idx, ResultKind::Scalar, [Scalar::number(total / s.len() as f64)]))
        }
        "min" | "max" => {
            let s = set_arg(step, "set", env)?.set();
            Ok(StepResult::new(idx, ResultKind::Scalar, [extreme(f, &s, f == "max")?]))
        }
        "set_intersection" | "set_union" | "set_difference" => {
            let a = set_arg(step, "set1", env)?;
            let b = set_arg(step, "set2", env)?;
            let (sa, sb) = (a.set(), b.set());
            let values: Vec<Scalar> = match f {
                "set_intersection" => sa.intersection(&sb).cloned().collect(),
                "set_union" => sa.union(&sb).cloned().collect(),
                _ => sa.difference(&sb).cloned().collect(),
            };
            let kind = if f == "set_difference" { a.kind } else { combined_kind(&a, &b) };
            let kind = if kind == ResultKind::Scalar { ResultKind::ValueSet } else { kind };
            Ok(StepResult::new(idx, kind, values))
        }
        "set_negation" => {
            let s = set_arg(step, "set", env)?.set();
            let values: Vec<Scalar> = cg.head_entities().into_iter().filter(|e| !s.contains(e)).collect();
            Ok(StepResult::new(idx, ResultKind::EntitySet, values))
        }
        other => Err(fault(other, format!("function '{other}' is not implemented by the executor"))),
    }
}

/// Runs every step in order, stopping at the first error.
pub fn execute_plan(plan: &ValidatedPlan, cg: &ConditionGraph, config: &ExecConfig) -> ExecutionOutcome {
    let steps = plan.steps();
    let mut env = BTreeMap::new();
    let mut per_step = Vec::with_capacity(steps.len());
    for (pos, step) in steps.iter().enumerate() {
        let result = match execute_step(step, &env, cg) {
            Ok(r) => r,
            Err(error) => {
                return ExecutionOutcome {
                    status: OutcomeStatus::Error,
                    per_step,
                    answer: None,
                    error: Some(error),
                }
            }
        };
        let is_final = pos + 1 == steps.len();
        let empty = result.is_empty();
        per_step.push(result.clone());
        if empty && (!is_final || config.strict_empty) {
            return ExecutionOutcome {
                status: OutcomeStatus::Error,
                per_step,
                answer: None,
                error: Some(classify(ExecFault::EmptyMidStep { step: step.index })),
            };
        }
        env.insert(step.index, result);
    }
    let answer = per_step.last().map(|r| r.values.clone());
    ExecutionOutcome {
        status: OutcomeStatus::Success,
        per_step,
        answer,
        error: None,
    }
}

/// Parses, validates and executes query text in one go.
pub fn run_query(
    text: &str,
    registry: &crate::dsl::FunctionRegistry,
    cg: &ConditionGraph,
    config: &ExecConfig,
) -> ExecutionOutcome {
    match crate::dsl::parse_and_validate(text, registry) {
        Ok(plan) => execute_plan(&plan, cg, config),
        Err(e) => ExecutionOutcome::rejected(e),
    }
}
