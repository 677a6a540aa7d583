//! Re-records `data/mini/script.jsonl` from the suite's playbook.
//!
//! Run after changing prompt templates or the playbook:
//! `cargo run --example record_mini_suite`

use std::fs::File;
use std::io::BufWriter;

use structqa::dsl::FunctionRegistry;
use structqa::harness::{evaluate, EvalMode, PipelineConfig};
use structqa::llm::{write_script, RecordingClient};
use structqa::suite::{MiniSuite, PlaybookClient};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = MiniSuite::bundled()?;
    let playbook = suite.playbook()?;
    let client = RecordingClient::new(PlaybookClient::new(&playbook, &suite.questions));
    let config = PipelineConfig::default();
    let run = evaluate(
        &suite.questions,
        &suite.catalog,
        &FunctionRegistry::default(),
        &suite.demos,
        &client,
        &config,
        EvalMode::WithEpm,
    )?;
    for t in &run.traces {
        println!("{:<4} {:?} n={} answer={:?}", t.question.id, t.status, t.n, t.final_outcome().answer);
    }
    println!("accuracy with correction: {:?}", run.report.value);

    let entries = client.entries();
    write_script(&entries, BufWriter::new(File::create(suite.script_path())?))?;
    println!("wrote {} replies to {}", entries.len(), suite.script_path().display());
    Ok(())
}
