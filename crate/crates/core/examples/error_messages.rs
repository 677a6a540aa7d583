//! Shows the message for every error kind, including the two that only
//! appear at run time.

use structqa::dsl::FunctionRegistry;
use structqa::epm::ErrorKind;
use structqa::executor::{run_query, ExecConfig};
use structqa::graph::{ingest_table, TableOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cg = ingest_table(
        &["Name", "Colleges", "Hometown", "Age"],
        &[vec!["Alice", "Utah", "Texas", "20"], vec!["Bob", "Ohio", "Texas", "25"]],
        &TableOptions::default(),
    )?;
    let queries = [
        "query1 = subtract(set1=output_of_query1, set2=output_of_query2)",
        "query1 = get_information(relation='Age')\nquery2 = max(set=output_of_query1, key='Age')",
        "query1 = get_information(head_entity='Alice', relation='Colleges', tail_entity='Utah')",
        "query1 = get_information(tail_entity='Utah', relation='Colleges', head_entity<'Bob')",
        "query1 = get_information(relation='Age')\nquery2 = sum(set=set_negation(set=output_of_query1))",
        "query1 = sum(set=[output_of_query1, output_of_query2])",
        "query1 = get_information(relation='Colleges')\nquery2 = sum(set=output_of_query1)",
        "query1 = get_information(relation='Hometown', tail_entity='Utah')\nquery2 = count(set=output_of_query1)",
    ];
    for (kind, text) in ErrorKind::ALL.iter().zip(queries) {
        let outcome = run_query(text, &FunctionRegistry::default(), &cg, &ExecConfig::default());
        let err = outcome.error.expect("every query here fails");
        assert_eq!(err.kind(), *kind);
        println!("[{:?}] {}\n  {}\n", err.category(), err.kind().name(), err.render_message());
    }
    Ok(())
}
