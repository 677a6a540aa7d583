//! Turns correction traces from the bundled suite into fine-tuning records
//! and student preference pairs.

use structqa::correction::{run_correction_with, Author, LoopConfig, QaContext};
use structqa::distill::{export, RecordKind};
use structqa::dsl::FunctionRegistry;
use structqa::jsonl::to_jsonl_string;
use structqa::suite::{MiniSuite, PlaybookClient};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = MiniSuite::bundled()?;
    let client = PlaybookClient::new(&suite.playbook()?, &suite.questions);
    let registry = FunctionRegistry::default();
    let cfg = LoopConfig::default();

    let mut traces = Vec::new();
    for (i, q) in suite.questions.iter().enumerate() {
        let g = suite.catalog.get(&q.graph_ref).expect("graph in manifest");
        let ctx = QaContext {
            graph: &g.graph,
            schema: &g.schema,
            registry: &registry,
            demos: &suite.demos,
        };
        // Treat every other question as written by the student.
        let author = if i % 2 == 0 { Author::Teacher } else { Author::Student };
        traces.push(run_correction_with(q, &ctx, &client, &client, author, &cfg)?);
    }

    let (records, pairs) = export(&traces);
    let corrections = records.iter().filter(|r| r.kind == RecordKind::Correction).count();
    println!(
        "{} traces -> {} records ({} correction), {} preference pairs",
        traces.len(),
        records.len(),
        corrections,
        pairs.len()
    );
    if let Some(r) = records.iter().find(|r| r.kind == RecordKind::Correction) {
        println!("\nfirst correction target:\n{}", r.target);
    }
    if let Some(p) = pairs.first() {
        println!("\npair from {} round {}:\nrejected:\n{}\nchosen:\n{}", p.trace_id, p.round, p.rejected, p.chosen);
        println!("\nas JSONL: {} bytes", to_jsonl_string(&pairs)?.len());
    }
    Ok(())
}
