use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::scalar::{normalize, Scalar};
use super::{ConditionGraph, SourceKind};

pub const SAMPLE_VALUES_PER_RELATION: usize = 3;

/// Schema summary handed to prompts: sorted relations plus a few sample
/// tail values each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDescriptor {
    pub relations: Vec<String>,
    pub sample_values: BTreeMap<String, Vec<Scalar>>,
    pub source_kind: SourceKind,
}

impl SchemaDescriptor {
    /// Text block used inside prompts.
    pub fn render(&self) -> String {
        let kind = match self.source_kind {
            SourceKind::Table => "table",
            SourceKind::Kg => "knowledge graph",
            SourceKind::TemporalKg => "temporal knowledge graph",
        };
        let mut out = format!("Data type: {kind}\nRelations:");
        if self.relations.is_empty() {
            out.push_str(" (none)");
        }
        for rel in &self.relations {
            let samples = self
                .sample_values
                .get(rel)
                .map(|v| v.iter().map(|s| format!("'{s}'")).collect::<Vec<_>>().join(", "))
                .unwrap_or_default();
            out.push_str(&format!("\n- '{rel}' e.g. {samples}"));
        }
        out
    }
}

pub fn schema_summary(cg: &ConditionGraph) -> SchemaDescriptor {
    let mut samples: BTreeMap<String, Vec<Scalar>> = BTreeMap::new();
    let mut sample_seen: HashSet<(String, String)> = HashSet::new();
    for e in cg.edges() {
        let bucket = samples.entry(e.relation.clone()).or_default();
        if bucket.len() < SAMPLE_VALUES_PER_RELATION
            && sample_seen.insert((normalize(&e.relation), e.tail.normalized()))
        {
            bucket.push(e.tail.clone());
        }
    }
    let relations: Vec<String> = samples.keys().cloned().collect();
    SchemaDescriptor {
        relations,
        sample_values: samples,
        source_kind: cg.source_kind(),
    }
}
