//! Drives the correction loop with a scripted model that gets the query
//! right on its second correction.

use structqa::correction::{run_correction, LoopConfig, QaContext, Question};
use structqa::dsl::FunctionRegistry;
use structqa::graph::{ingest_table, schema_summary, Scalar, TableOptions};
use structqa::llm::{ScriptEntry, ScriptMode, ScriptedClient};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cg = ingest_table(
        &["Name", "Colleges", "Hometown", "Age"],
        &[vec!["Alice", "Utah", "Texas", "20"], vec!["Bob", "Ohio", "Texas", "25"]],
        &TableOptions::default(),
    )?;
    let schema = schema_summary(&cg);
    let registry = FunctionRegistry::default();
    let ctx = QaContext {
        graph: &cg,
        schema: &schema,
        registry: &registry,
        demos: &[],
    };

    let replies = [
        "query1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = total(set=output_of_query1)",
        "Analysis: total is not a function; use sum.\nquery1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = sum(set=output_of_query1)",
        "Analysis: sum the ages, not the people.\nquery1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = get_information(head_entity=output_of_query1, relation='Age')\nquery3 = sum(set=output_of_query2)",
    ];
    let client = ScriptedClient::new(
        replies
            .iter()
            .map(|r| ScriptEntry {
                key: String::new(),
                reply: r.to_string(),
            })
            .collect(),
        ScriptMode::Ordered,
    );
    let question = Question {
        id: "q1".into(),
        text: "What is the total age of people from Texas?".into(),
        gold: Some(vec![Scalar::number(45.0)]),
        graph_ref: String::new(),
    };
    let cfg = LoopConfig {
        self_consistency: 1,
        ..LoopConfig::default()
    };
    let trace = run_correction(&question, &ctx, &client, &cfg)?;

    println!("initial query:\n{}", trace.initial_plan_text);
    for r in &trace.rounds {
        println!("\nround {}: {}", r.index, r.error_in.render_message());
        println!("analysis: {}", r.analysis);
        println!("updated query:\n{}", r.updated_plan_text);
    }
    println!("\nstatus {:?} after {} round(s), answer {:?}", trace.status, trace.n, trace.final_outcome().answer);
    Ok(())
}
