//! Condition graph: a flat, qualified edge store for tables, knowledge graphs
//! and temporal knowledge graphs.

mod ingest;
pub mod io;
mod schema;
pub mod scalar;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_table, ingest_temporal, ingest_triples, TableOptions};
pub use scalar::{normalize, DateValue, Scalar, ScalarKind};
pub use schema::{schema_summary, SchemaDescriptor, SAMPLE_VALUES_PER_RELATION};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("table header is empty")]
    EmptyHeader,
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("key column {index} is out of range for a {width}-column header")]
    KeyColumn { index: usize, width: usize },
    #[error("record {index}: field `{field}` is empty")]
    EmptyField { index: usize, field: &'static str },
    #[error("record {index}: `{value}` is not a date or integer year")]
    BadTimestamp { index: usize, value: String },
    #[error("comparator `{comparator}` cannot be applied to a {kind:?} value")]
    KindMismatch {
        comparator: Comparator,
        kind: ScalarKind,
    },
    #[error("lookup pattern binds no field")]
    EmptyPattern,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Comparison operator usable in a query argument or lookup pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::Eq,
        Comparator::Lt,
        Comparator::Gt,
        Comparator::Le,
        Comparator::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.symbol() == symbol)
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparator::Eq => ord == Ordering::Equal,
            Comparator::Lt => ord == Ordering::Less,
            Comparator::Gt => ord == Ordering::Greater,
            Comparator::Le => ord != Ordering::Greater,
            Comparator::Ge => ord != Ordering::Less,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Applies `stored <cmp> probe` using the stored value's kind.
///
/// Text supports only `=`, matched on normalized labels. Numeric and date
/// values coerce the probe; an uncoercible probe never equals and is a kind
/// mismatch for ordering comparators.
pub fn compare_scalar(stored: &Scalar, cmp: Comparator, probe: &Scalar) -> Result<bool, GraphError> {
    let mismatch = || GraphError::KindMismatch {
        comparator: cmp,
        kind: stored.kind(),
    };
    match stored {
        Scalar::Text(text) => {
            if cmp != Comparator::Eq {
                return Err(mismatch());
            }
            Ok(normalize(text) == probe.normalized())
        }
        Scalar::Number(n) => {
            let other = match probe {
                Scalar::Number(p) => Some(*p),
                Scalar::Text(t) => scalar::parse_number(t),
                Scalar::Date(_) => None,
            };
            match other {
                Some(p) => Ok(cmp.holds(n.total_cmp(&p))),
                None if cmp == Comparator::Eq => Ok(false),
                None => Err(mismatch()),
            }
        }
        Scalar::Date(d) => {
            let other = match probe {
                Scalar::Date(p) => Some(*p),
                Scalar::Number(p) if p.fract() == 0.0 => Some(DateValue::year(*p as i32)),
                Scalar::Number(_) => None,
                Scalar::Text(t) => DateValue::parse(t),
            };
            match other {
                Some(p) => Ok(cmp.holds(d.cmp_coarse(&p))),
                None if cmp == Comparator::Eq => Ok(false),
                None => Err(mismatch()),
            }
        }
    }
}

/// Qualifier attached to temporal or conditional facts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Qualifier {
    pub key: String,
    pub value: Scalar,
}

/// One fact: `(head, relation, tail[, qualifier])`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub head: String,
    pub relation: String,
    pub tail: Scalar,
    pub qualifier: Option<Qualifier>,
}

impl Edge {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: Scalar) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail,
            qualifier: None,
        }
    }

    pub fn with_qualifier(mut self, key: impl Into<String>, value: Scalar) -> Self {
        self.qualifier = Some(Qualifier {
            key: key.into(),
            value,
        });
        self
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}", self.head, self.relation, self.tail)?;
        if let Some(q) = &self.qualifier {
            write!(f, ", {}={}", q.key, q.value)?;
        }
        f.write_str(")")
    }
}

/// What the graph was built from; surfaces in the schema shown to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Table,
    Kg,
    TemporalKg,
}

pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum KeyPart {
    Label(String),
    Value(Scalar),
}

impl KeyPart {
    fn of(value: &Scalar) -> Self {
        match value {
            Scalar::Text(t) => KeyPart::Label(normalize(t)),
            other => KeyPart::Value(other.clone()),
        }
    }
}

type EdgeKey = (String, String, KeyPart, Option<(String, KeyPart)>);

fn edge_key(edge: &Edge) -> EdgeKey {
    (
        normalize(&edge.head),
        normalize(&edge.relation),
        KeyPart::of(&edge.tail),
        edge.qualifier
            .as_ref()
            .map(|q| (normalize(&q.key), KeyPart::of(&q.value))),
    )
}

/// Immutable edge store with normalized entity and relation indices.
///
/// Text labels are canonicalized to their first-seen spelling, so every value
/// read back from the graph agrees with every other on case and spacing.
#[derive(Debug, Clone)]
pub struct ConditionGraph {
    edges: Vec<Edge>,
    entity_index: HashMap<String, Vec<EdgeId>>,
    relation_index: HashMap<String, Vec<EdgeId>>,
    source_kind: SourceKind,
}

/// Builds a [`ConditionGraph`], deduplicating and canonicalizing as it goes.
#[derive(Debug)]
pub struct GraphBuilder {
    graph: ConditionGraph,
    seen: HashSet<EdgeKey>,
    spellings: HashMap<String, String>,
}

impl GraphBuilder {
    pub fn new(source_kind: SourceKind) -> Self {
        Self {
            graph: ConditionGraph {
                edges: Vec::new(),
                entity_index: HashMap::new(),
                relation_index: HashMap::new(),
                source_kind,
            },
            seen: HashSet::new(),
            spellings: HashMap::new(),
        }
    }

    fn canonical(&mut self, label: &str) -> String {
        let label = label.trim();
        self.spellings
            .entry(normalize(label))
            .or_insert_with(|| label.to_string())
            .clone()
    }

    fn canonical_scalar(&mut self, value: Scalar) -> Scalar {
        match value {
            Scalar::Text(t) => Scalar::Text(self.canonical(&t)),
            other => other,
        }
    }

    /// Adds an edge; returns false when an identical edge already exists.
    /// Heads and relations must be non-empty after normalization.
    pub fn push(&mut self, edge: Edge) -> bool {
        debug_assert!(!normalize(&edge.head).is_empty());
        debug_assert!(!normalize(&edge.relation).is_empty());
        let key = edge_key(&edge);
        if !self.seen.insert(key) {
            return false;
        }
        let edge = Edge {
            head: self.canonical(&edge.head),
            relation: self.canonical(&edge.relation),
            tail: self.canonical_scalar(edge.tail),
            qualifier: edge.qualifier.map(|q| Qualifier {
                key: q.key.trim().to_string(),
                value: self.canonical_scalar(q.value),
            }),
        };
        let id = self.graph.edges.len();
        let g = &mut self.graph;
        g.entity_index.entry(normalize(&edge.head)).or_default().push(id);
        if let Scalar::Text(t) = &edge.tail {
            let label = normalize(t);
            if label != normalize(&edge.head) {
                g.entity_index.entry(label).or_default().push(id);
            }
        }
        g.relation_index
            .entry(normalize(&edge.relation))
            .or_default()
            .push(id);
        g.edges.push(edge);
        true
    }

    pub fn build(self) -> ConditionGraph {
        self.graph
    }
}

/// Constraint on an edge's qualifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualifierPattern {
    pub key: Option<String>,
    pub value: Option<(Comparator, Scalar)>,
}

/// Lookup pattern; every bound field must match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pattern {
    pub head: Option<String>,
    pub relation: Option<String>,
    pub tail: Option<Scalar>,
    pub tail_comparator: Option<Comparator>,
    pub qualifier: Option<QualifierPattern>,
}

impl Pattern {
    pub fn head(mut self, head: impl Into<String>) -> Self {
        self.head = Some(head.into());
        self
    }

    pub fn relation(mut self, relation: impl Into<String>) -> Self {
        self.relation = Some(relation.into());
        self
    }

    pub fn tail(mut self, tail: impl Into<Scalar>) -> Self {
        self.tail = Some(tail.into());
        self
    }

    pub fn tail_cmp(mut self, cmp: Comparator, tail: impl Into<Scalar>) -> Self {
        self.tail = Some(tail.into());
        self.tail_comparator = Some(cmp);
        self
    }

    pub fn qualifier(mut self, q: QualifierPattern) -> Self {
        self.qualifier = Some(q);
        self
    }

    fn is_empty(&self) -> bool {
        self.head.is_none()
            && self.relation.is_none()
            && self.tail.is_none()
            && self
                .qualifier
                .as_ref()
                .is_none_or(|q| q.key.is_none() && q.value.is_none())
    }

    /// Full match of one edge against the pattern.
    pub fn matches(&self, edge: &Edge) -> Result<bool, GraphError> {
        if let Some(h) = &self.head {
            if normalize(&edge.head) != normalize(h) {
                return Ok(false);
            }
        }
        if let Some(r) = &self.relation {
            if normalize(&edge.relation) != normalize(r) {
                return Ok(false);
            }
        }
        if let Some(t) = &self.tail {
            let cmp = self.tail_comparator.unwrap_or(Comparator::Eq);
            if !compare_scalar(&edge.tail, cmp, t)? {
                return Ok(false);
            }
        }
        if let Some(qp) = &self.qualifier {
            let Some(q) = &edge.qualifier else {
                return Ok(false);
            };
            if let Some(k) = &qp.key {
                if normalize(&q.key) != normalize(k) {
                    return Ok(false);
                }
            }
            if let Some((cmp, v)) = &qp.value {
                if !compare_scalar(&q.value, *cmp, v)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

impl ConditionGraph {
    pub fn empty(source_kind: SourceKind) -> Self {
        GraphBuilder::new(source_kind).build()
    }

    pub fn from_edges(source_kind: SourceKind, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut b = GraphBuilder::new(source_kind);
        for e in edges {
            b.push(e);
        }
        b.build()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source_kind
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Edge ids carrying `label` as head or text tail.
    pub fn edges_with_entity(&self, label: &str) -> &[EdgeId] {
        self.entity_index
            .get(&normalize(label))
            .map_or(&[], Vec::as_slice)
    }

    pub fn edges_with_relation(&self, relation: &str) -> &[EdgeId] {
        self.relation_index
            .get(&normalize(relation))
            .map_or(&[], Vec::as_slice)
    }

    /// Every distinct head label, in first-seen order.
    pub fn head_entities(&self) -> Vec<Scalar> {
        let mut seen = HashSet::new();
        self.edges
            .iter()
            .filter(|e| seen.insert(normalize(&e.head)))
            .map(|e| Scalar::Text(e.head.clone()))
            .collect()
    }

    /// Edges matching every bound field of `pattern`, in insertion order.
    pub fn lookup(&self, pattern: &Pattern) -> Result<Vec<&Edge>, GraphError> {
        if pattern.is_empty() {
            return Err(GraphError::EmptyPattern);
        }
        // Start from the smallest index bucket among the bound labels.
        let mut candidates: Option<&[EdgeId]> = None;
        if let Some(h) = &pattern.head {
            candidates = Some(self.edges_with_entity(h));
        }
        if let Some(r) = &pattern.relation {
            let ids = self.edges_with_relation(r);
            if candidates.is_none_or(|c| ids.len() < c.len()) {
                candidates = Some(ids);
            }
        }
        // A text probe that reads as a number or date may match typed tails
        // that the entity index does not cover.
        if let (Some(Scalar::Text(t)), None | Some(Comparator::Eq)) =
            (&pattern.tail, pattern.tail_comparator)
        {
            if Scalar::infer(t).kind() != ScalarKind::Text {
                return self.scan(pattern, candidates);
            }
            let ids = self.edges_with_entity(t);
            if candidates.is_none_or(|c| ids.len() < c.len()) {
                candidates = Some(ids);
            }
        }
        self.scan(pattern, candidates)
    }

    fn scan(&self, pattern: &Pattern, candidates: Option<&[EdgeId]>) -> Result<Vec<&Edge>, GraphError> {
        let mut out = Vec::new();
        match candidates {
            Some(ids) => {
                for &id in ids {
                    let e = &self.edges[id];
                    if pattern.matches(e)? {
                        out.push(e);
                    }
                }
            }
            None => {
                for e in &self.edges {
                    if pattern.matches(e)? {
                        out.push(e);
                    }
                }
            }
        }
        Ok(out)
    }
}
