//! Dataset evaluation and error statistics.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::answer::{denotation_match, hit_at_1};
use crate::correction::{run_correction, CorrectionTrace, Demonstration, LoopConfig, LoopError, QaContext, Question, TraceStatus};
use crate::dsl::FunctionRegistry;
use crate::epm::{Category, ErrorKind};
use crate::graph::io::{read_dump, read_quads, read_table, read_triples};
use crate::graph::{schema_summary, ConditionGraph, GraphError, SchemaDescriptor, TableOptions};
use crate::jsonl::{read_jsonl, JsonlError};
use crate::llm::{ChatClient, ClientConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("question {0} has no gold answer")]
    MissingGold(String),
    #[error("question {question} refers to unknown graph '{graph}'")]
    GraphNotFound { question: String, graph: String },
    #[error("question {question}: {source}")]
    Loop { question: String, source: LoopError },
    #[error("graph '{name}': {source}")]
    Graph { name: String, source: GraphError },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Jsonl { path: PathBuf, source: JsonlError },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFileKind {
    /// Delimited table with a header row.
    Table,
    /// Tab-separated triples.
    Kg,
    /// Tab-separated quadruples whose last column is a time.
    Temporal,
    /// JSON-lines edge dump.
    Dump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub name: String,
    pub kind: GraphFileKind,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    /// Header name of the key column; defaults to the first column.
    #[serde(default)]
    pub key_column: Option<String>,
    #[serde(default)]
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub graph: Vec<GraphSpec>,
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: ConditionGraph,
    pub schema: SchemaDescriptor,
}

/// Named graphs questions can refer to.
#[derive(Debug, Clone, Default)]
pub struct GraphCatalog {
    graphs: BTreeMap<String, LoadedGraph>,
}

/// Loads one graph file, resolving a relative path against `base`.
pub fn load_graph_file(spec: &GraphSpec, base: &Path) -> Result<ConditionGraph, GraphError> {
    let path = base.join(&spec.path);
    let open = || File::open(&path).map(BufReader::new);
    match spec.kind {
        GraphFileKind::Table => {
            let delimiter = spec.delimiter.unwrap_or(',');
            let mut buf = [0u8; 4];
            let delim_byte = delimiter.encode_utf8(&mut buf).as_bytes()[0];
            let key_column = match &spec.key_column {
                None => 0,
                Some(name) => {
                    let text = fs::read_to_string(&path)?;
                    let header = text.lines().next().unwrap_or("");
                    header
                        .split(delimiter)
                        .position(|h| h.trim() == name)
                        .ok_or_else(|| GraphError::Format {
                            line: 1,
                            message: format!("no column named '{name}'"),
                        })?
                }
            };
            read_table(open()?, delim_byte, &TableOptions { key_column })
        }
        GraphFileKind::Kg => read_triples(open()?),
        GraphFileKind::Temporal => read_quads(open()?),
        GraphFileKind::Dump => read_dump(open()?),
    }
}

impl GraphCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, graph: ConditionGraph) {
        let schema = schema_summary(&graph);
        self.graphs.insert(name.into(), LoadedGraph { graph, schema });
    }

    pub fn get(&self, name: &str) -> Option<&LoadedGraph> {
        self.graphs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.graphs.keys().map(String::as_str)
    }

    /// Loads every graph listed in a TOML manifest of `[[graph]]` tables.
    pub fn from_manifest(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| HarnessError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut catalog = Self::new();
        for spec in &manifest.graph {
            let graph = load_graph_file(spec, base).map_err(|source| HarnessError::Graph {
                name: spec.name.clone(),
                source,
            })?;
            catalog.insert(spec.name.clone(), graph);
        }
        Ok(catalog)
    }
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path)?;
    read_jsonl(BufReader::new(file)).map_err(|source| HarnessError::Jsonl {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a dataset of `{id, question, gold, graph_ref}` lines.
pub fn load_questions(path: &Path) -> Result<Vec<Question>, HarnessError> {
    read_jsonl_file(path)
}

pub fn load_demos(path: &Path) -> Result<Vec<Demonstration>, HarnessError> {
    read_jsonl_file(path)
}

pub fn load_traces(path: &Path) -> Result<Vec<CorrectionTrace>, HarnessError> {
    read_jsonl_file(path)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Correction loop enabled.
    #[default]
    WithEpm,
    /// A single generate-and-execute pass.
    WithoutEpm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    DenotationAccuracy,
    HitsAt1,
}

/// Settings read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub client: ClientConfig,
    pub correction: LoopConfig,
    pub metric: Metric,
    /// Questions evaluated at once.
    pub parallelism: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            client: ClientConfig::default(),
            correction: LoopConfig::default(),
            metric: Metric::default(),
            parallelism: 1,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

fn percent_or_na<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_str("n/a"),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EvalCounts {
    pub total: usize,
    pub solved_direct: usize,
    /// Keyed by the number of rounds used.
    pub solved_after_n: BTreeMap<usize, usize>,
    pub failed_mct: usize,
    /// Ran cleanly after at least one correction round but disagrees with gold.
    pub failed_gold_mismatch: usize,
    /// Ran cleanly with no correction needed but disagrees with gold.
    pub alignment_miss: usize,
}

impl EvalCounts {
    fn add(&mut self, trace: &CorrectionTrace) {
        self.total += 1;
        match trace.status {
            TraceStatus::SolvedDirect => self.solved_direct += 1,
            TraceStatus::SolvedAfterN => *self.solved_after_n.entry(trace.n).or_default() += 1,
            TraceStatus::FailedMct => self.failed_mct += 1,
            TraceStatus::FailedGoldMismatch if trace.n == 0 => self.alignment_miss += 1,
            TraceStatus::FailedGoldMismatch => self.failed_gold_mismatch += 1,
        }
    }

    pub fn sum(&self) -> usize {
        self.solved_direct
            + self.solved_after_n.values().sum::<usize>()
            + self.failed_mct
            + self.failed_gold_mismatch
            + self.alignment_miss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub metric: Metric,
    /// Percent; "n/a" when there are no questions.
    #[serde(serialize_with = "percent_or_na")]
    pub value: Option<f64>,
    pub correct: usize,
    pub counts: EvalCounts,
}

/// Whether a trace's final answer is correct under `metric`.
pub fn is_correct(trace: &CorrectionTrace, metric: Metric) -> bool {
    let outcome = trace.final_outcome();
    let (Some(answer), Some(gold)) = (outcome.answer.as_deref(), trace.question.gold.as_deref()) else {
        return false;
    };
    if outcome.error.is_some() {
        return false;
    }
    match metric {
        Metric::DenotationAccuracy => denotation_match(answer, gold),
        Metric::HitsAt1 => hit_at_1(answer, gold),
    }
}

pub fn report(traces: &[CorrectionTrace], mode: EvalMode, metric: Metric) -> EvalReport {
    let mut counts = EvalCounts::default();
    let mut correct = 0;
    for t in traces {
        counts.add(t);
        if is_correct(t, metric) {
            correct += 1;
        }
    }
    let value = (counts.total > 0).then(|| 100.0 * correct as f64 / counts.total as f64);
    EvalReport {
        mode,
        metric,
        value,
        correct,
        counts,
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    /// In question order.
    pub traces: Vec<CorrectionTrace>,
}

/// Answers every question and scores the answers. Inputs are checked before
/// any model call.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    questions: &[Question],
    catalog: &GraphCatalog,
    registry: &FunctionRegistry,
    demos: &[Demonstration],
    client: &dyn ChatClient,
    config: &PipelineConfig,
    mode: EvalMode,
) -> Result<Evaluation, HarnessError> {
    for q in questions {
        if q.gold.is_none() {
            return Err(HarnessError::MissingGold(q.id.clone()));
        }
        if catalog.get(&q.graph_ref).is_none() {
            return Err(HarnessError::GraphNotFound {
                question: q.id.clone(),
                graph: q.graph_ref.clone(),
            });
        }
    }
    let mut loop_cfg = config.correction.clone();
    if mode == EvalMode::WithoutEpm {
        loop_cfg.mct = 0;
    }
    let run_one = |q: &Question| -> Result<CorrectionTrace, HarnessError> {
        let g = catalog.get(&q.graph_ref).expect("checked above");
        let ctx = QaContext {
            graph: &g.graph,
            schema: &g.schema,
            registry,
            demos,
        };
        run_correction(q, &ctx, client, &loop_cfg).map_err(|source| HarnessError::Loop {
            question: q.id.clone(),
            source,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let traces: Vec<CorrectionTrace> =
        pool.install(|| questions.par_iter().map(run_one).collect::<Result<_, _>>())?;
    Ok(Evaluation {
        report: report(&traces, mode, config.metric),
        traces,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub count_before: usize,
    pub count_after: usize,
    pub corrected_pct: f64,
}

impl Tally {
    fn finish(mut self) -> Self {
        self.corrected_pct = if self.count_before == 0 {
            0.0
        } else {
            100.0 * (self.count_before - self.count_after) as f64 / self.count_before as f64
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindTally {
    pub kind: ErrorKind,
    pub category: Category,
    #[serde(flatten)]
    pub tally: Tally,
}

/// Errors in initial queries, and how many of those questions still ended in
/// an error after the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    /// Every kind, in taxonomy order.
    pub kinds: Vec<KindTally>,
    pub parsing: Tally,
    pub execution: Tally,
    pub overall: Tally,
}

impl ErrorStats {
    pub fn kind(&self, kind: ErrorKind) -> &Tally {
        &self.kinds.iter().find(|k| k.kind == kind).expect("all kinds listed").tally
    }
}

pub fn error_stats(traces: &[CorrectionTrace]) -> ErrorStats {
    let mut per_kind: BTreeMap<ErrorKind, Tally> = ErrorKind::ALL.iter().map(|k| (*k, Tally::default())).collect();
    for t in traces {
        let Some(initial) = &t.initial_outcome.error else {
            continue;
        };
        let entry = per_kind.get_mut(&initial.kind()).expect("all kinds present");
        entry.count_before += 1;
        if t.final_outcome().error.is_some() {
            entry.count_after += 1;
        }
    }
    let mut parsing = Tally::default();
    let mut execution = Tally::default();
    for (kind, tally) in &per_kind {
        let bucket = match kind.category() {
            Category::Parsing => &mut parsing,
            Category::Execution => &mut execution,
        };
        bucket.count_before += tally.count_before;
        bucket.count_after += tally.count_after;
    }
    let overall = Tally {
        count_before: parsing.count_before + execution.count_before,
        count_after: parsing.count_after + execution.count_after,
        corrected_pct: 0.0,
    };
    ErrorStats {
        kinds: ErrorKind::ALL
            .iter()
            .map(|k| KindTally {
                kind: *k,
                category: k.category(),
                tally: per_kind[k].finish(),
            })
            .collect(),
        parsing: parsing.finish(),
        execution: execution.finish(),
        overall: overall.finish(),
    }
}
