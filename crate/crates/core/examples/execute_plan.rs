//! Runs a multi-step query and prints each step's result.

use structqa::dsl::{parse_and_validate, FunctionRegistry};
use structqa::executor::{execute_plan, ExecConfig};
use structqa::graph::{ingest_table, TableOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cg = ingest_table(
        &["Name", "Team", "Age", "Points"],
        &[
            vec!["Alice", "Hawks", "24", "31"],
            vec!["Bob", "Hawks", "29", "12"],
            vec!["Carol", "Owls", "31", "27"],
        ],
        &TableOptions::default(),
    )?;
    let text = "query1 = get_information(relation='Team', tail_entity='Hawks')\n\
                query2 = keep(set=output_of_query1, key='Points', value>20)\n\
                query3 = set_negation(set=output_of_query2)\n\
                query4 = get_information(head_entity=output_of_query3, relation='Age')\n\
                query5 = max(set=output_of_query4)";
    let plan = parse_and_validate(text, &FunctionRegistry::default())?;
    let outcome = execute_plan(&plan, &cg, &ExecConfig::default());
    for (step, result) in plan.steps().iter().zip(&outcome.per_step) {
        let values: Vec<String> = result.values.iter().map(ToString::to_string).collect();
        println!("{step}\n  -> {:?} {values:?}", result.kind);
    }
    println!("answer: {:?}", outcome.answer);
    Ok(())
}
