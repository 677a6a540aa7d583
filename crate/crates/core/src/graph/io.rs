//! File adapters: CSV/TSV tables, triple and quad TSV, and the JSONL edge dump.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::scalar::{scalar_with_kind, Scalar, ScalarKind};
use super::{
    ingest_table, ingest_temporal, ingest_triples, ConditionGraph, Edge, GraphBuilder, GraphError,
    SourceKind, TableOptions,
};

#[derive(Debug, Serialize, Deserialize)]
struct QualifierLine {
    key: String,
    value: serde_json::Value,
    value_kind: ScalarKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeLine {
    head: String,
    relation: String,
    tail: serde_json::Value,
    tail_kind: ScalarKind,
    qualifier: Option<QualifierLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<SourceKind>,
}

fn json_scalar(value: &Scalar) -> serde_json::Value {
    serde_json::to_value(value).expect("scalar serializes")
}

fn scalar_from_json(value: &serde_json::Value, kind: ScalarKind, line: usize) -> Result<Scalar, GraphError> {
    let text = match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    scalar_with_kind(&text, kind).ok_or_else(|| GraphError::Format {
        line,
        message: format!("`{text}` is not a valid {kind:?} value"),
    })
}

/// Writes one JSON object per edge.
pub fn write_dump<W: Write>(cg: &ConditionGraph, mut out: W) -> Result<(), GraphError> {
    for e in cg.edges() {
        let line = EdgeLine {
            head: e.head.clone(),
            relation: e.relation.clone(),
            tail: json_scalar(&e.tail),
            tail_kind: e.tail.kind(),
            qualifier: e.qualifier.as_ref().map(|q| QualifierLine {
                key: q.key.clone(),
                value: json_scalar(&q.value),
                value_kind: q.value.kind(),
            }),
            source: Some(cg.source_kind()),
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads an edge dump. Without `source` fields the kind falls back to
/// temporal KG when any edge carries a qualifier, else KG.
pub fn read_dump<R: BufRead>(input: R) -> Result<ConditionGraph, GraphError> {
    let mut edges = Vec::new();
    let mut source = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EdgeLine = serde_json::from_str(&line).map_err(|e| GraphError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.head.trim().is_empty() || rec.relation.trim().is_empty() {
            return Err(GraphError::EmptyField {
                index: i,
                field: "head/relation",
            });
        }
        source = source.or(rec.source);
        let mut edge = Edge::new(rec.head, rec.relation, scalar_from_json(&rec.tail, rec.tail_kind, i + 1)?);
        if let Some(q) = rec.qualifier {
            edge = edge.with_qualifier(q.key, scalar_from_json(&q.value, q.value_kind, i + 1)?);
        }
        edges.push(edge);
    }
    let kind = source.unwrap_or(if edges.iter().any(|e| e.qualifier.is_some()) {
        SourceKind::TemporalKg
    } else {
        SourceKind::Kg
    });
    let mut b = GraphBuilder::new(kind);
    for e in edges {
        b.push(e);
    }
    Ok(b.build())
}

fn reader<R: Read>(input: R, delimiter: u8, has_headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_headers)
        .flexible(true)
        .from_reader(input)
}

/// Reads a UTF-8 table with a header row.
pub fn read_table<R: Read>(input: R, delimiter: u8, options: &TableOptions) -> Result<ConditionGraph, GraphError> {
    let mut rdr = reader(input, delimiter, true);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let header: Vec<String> = if header.len() == 1 && header[0].is_empty() {
        Vec::new()
    } else {
        header
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect::<Vec<_>>());
    }
    ingest_table(&header, &rows, options)
}

fn read_columns<R: Read>(input: R, width: usize) -> Result<Vec<Vec<String>>, GraphError> {
    let mut rdr = reader(input, b'\t', false);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(GraphError::RaggedRow {
                row: i,
                expected: width,
                found: rec.len(),
            });
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

/// Reads `head<TAB>relation<TAB>tail` lines.
pub fn read_triples<R: Read>(input: R) -> Result<ConditionGraph, GraphError> {
    let rows = read_columns(input, 3)?;
    let triples: Vec<(&str, &str, &str)> = rows
        .iter()
        .map(|r| (r[0].as_str(), r[1].as_str(), r[2].as_str()))
        .collect();
    ingest_triples(&triples)
}

/// Reads `head<TAB>relation<TAB>tail<TAB>time` lines.
pub fn read_quads<R: Read>(input: R) -> Result<ConditionGraph, GraphError> {
    let rows = read_columns(input, 4)?;
    let quads: Vec<(&str, &str, &str, &str)> = rows
        .iter()
        .map(|r| (r[0].as_str(), r[1].as_str(), r[2].as_str(), r[3].as_str()))
        .collect();
    ingest_temporal(&quads)
}
