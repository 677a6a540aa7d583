//! Evaluates the bundled twenty-question suite with and without correction
//! and breaks down which error kinds were fixed.

use structqa::dsl::FunctionRegistry;
use structqa::harness::{error_stats, evaluate, EvalMode, PipelineConfig};
use structqa::llm::{ScriptMode, ScriptedClient};
use structqa::suite::MiniSuite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = MiniSuite::bundled()?;
    let registry = FunctionRegistry::default();
    let config = PipelineConfig::default();
    for mode in [EvalMode::WithoutEpm, EvalMode::WithEpm] {
        let client = ScriptedClient::from_path(&suite.script_path(), ScriptMode::Keyed)?;
        let run = evaluate(&suite.questions, &suite.catalog, &registry, &suite.demos, &client, &config, mode)?;
        println!("{}", serde_json::to_string_pretty(&run.report)?);
        if mode == EvalMode::WithEpm {
            for k in error_stats(&run.traces).kinds.iter().filter(|k| k.tally.count_before > 0) {
                println!("{:<24} {} -> {} ({}% corrected)", k.kind.name(), k.tally.count_before, k.tally.count_after, k.tally.corrected_pct);
            }
        }
    }
    Ok(())
}
