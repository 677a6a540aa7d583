//! Parses query text into steps and shows how malformed queries are
//! classified before anything runs.

use structqa::dsl::{parse_and_validate, FunctionRegistry};

fn main() {
    let registry = FunctionRegistry::default();
    let good = "query1 = get_information(relation='Colleges', tail_entity='Utah')\n\
                query2 = get_information(head_entity=output_of_query1, relation='Age')\n\
                query3 = mean(set=output_of_query2)";
    let plan = parse_and_validate(good, &registry).expect("valid query");
    for step in plan.steps() {
        println!("step {}: {} with {} argument(s)", step.index, step.function, step.args.len());
    }
    println!("canonical form:\n{}\n", plan.plan().render());

    let bad = [
        "query1 = subtract(set1=output_of_query1, set2=output_of_query2)",
        "query1 = get_information(relation='Age')\nquery2 = max(set=output_of_query1, key='Age')",
        "query1 = get_information(head_entity='Alice', relation='Colleges', tail_entity='Utah')",
        "query1 = get_information(relation='Colleges', head_entity<'Bob')",
        "query1 = get_information(relation='Age')\nquery2 = sum(set=set_negation(set=output_of_query1))",
        "query1 = sum(set=[output_of_query1, output_of_query2])",
    ];
    for text in bad {
        let err = parse_and_validate(text, &registry).unwrap_err();
        println!("{:<24} {}", err.kind().name(), err.render_message());
    }
}
