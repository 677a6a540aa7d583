use super::scalar::{normalize, DateValue, Scalar};
use super::{ConditionGraph, Edge, GraphBuilder, GraphError, SourceKind};

/// Table ingestion options.
#[derive(Debug, Clone, Default)]
pub struct TableOptions {
    /// Column whose cell becomes the edge head for every other column.
    pub key_column: usize,
}

/// One edge per (row, non-key column): `(row key, column name, cell)`.
///
/// Empty non-key cells produce no edge.
pub fn ingest_table<H, R, C>(
    header: &[H],
    rows: &[R],
    options: &TableOptions,
) -> Result<ConditionGraph, GraphError>
where
    H: AsRef<str>,
    R: AsRef<[C]>,
    C: AsRef<str>,
{
    if header.is_empty() {
        return Err(GraphError::EmptyHeader);
    }
    let key = options.key_column;
    if key >= header.len() {
        return Err(GraphError::KeyColumn {
            index: key,
            width: header.len(),
        });
    }
    if let Some(i) = header.iter().position(|h| normalize(h.as_ref()).is_empty()) {
        if i != key {
            return Err(GraphError::EmptyField {
                index: i,
                field: "column name",
            });
        }
    }
    let mut builder = GraphBuilder::new(SourceKind::Table);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(GraphError::RaggedRow {
                row: r,
                expected: header.len(),
                found: row.len(),
            });
        }
        let head = row[key].as_ref();
        if normalize(head).is_empty() {
            return Err(GraphError::EmptyField {
                index: r,
                field: "row key",
            });
        }
        for (c, cell) in row.iter().enumerate() {
            let cell = cell.as_ref();
            if c == key || cell.trim().is_empty() {
                continue;
            }
            builder.push(Edge::new(head, header[c].as_ref(), Scalar::infer(cell)));
        }
    }
    Ok(builder.build())
}

fn check_fields(index: usize, head: &str, relation: &str) -> Result<(), GraphError> {
    if normalize(head).is_empty() {
        return Err(GraphError::EmptyField { index, field: "head" });
    }
    if normalize(relation).is_empty() {
        return Err(GraphError::EmptyField {
            index,
            field: "relation",
        });
    }
    Ok(())
}

/// One edge per distinct triple.
pub fn ingest_triples<S: AsRef<str>>(triples: &[(S, S, S)]) -> Result<ConditionGraph, GraphError> {
    let mut builder = GraphBuilder::new(SourceKind::Kg);
    for (i, (h, r, t)) in triples.iter().enumerate() {
        let (h, r, t) = (h.as_ref(), r.as_ref(), t.as_ref());
        check_fields(i, h, r)?;
        builder.push(Edge::new(h, r, Scalar::infer(t)));
    }
    Ok(builder.build())
}

/// One edge per quad, with the time stored as a `time` qualifier.
pub fn ingest_temporal<S: AsRef<str>>(
    quads: &[(S, S, S, S)],
) -> Result<ConditionGraph, GraphError> {
    let mut builder = GraphBuilder::new(SourceKind::TemporalKg);
    for (i, (h, r, t, time)) in quads.iter().enumerate() {
        let (h, r, t, time) = (h.as_ref(), r.as_ref(), t.as_ref(), time.as_ref());
        check_fields(i, h, r)?;
        let when = DateValue::parse(time).ok_or_else(|| GraphError::BadTimestamp {
            index: i,
            value: time.to_string(),
        })?;
        builder.push(Edge::new(h, r, Scalar::infer(t)).with_qualifier("time", Scalar::Date(when)));
    }
    Ok(builder.build())
}
