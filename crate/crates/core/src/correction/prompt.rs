use crate::dsl::FunctionRegistry;
use crate::epm::EpmError;
use crate::graph::SchemaDescriptor;
use crate::llm::ChatMessage;

use super::Demonstration;

const DATA_MODEL: &str = "The data (a table, a knowledge graph or a temporal knowledge graph) has been converted into a condition graph: \
a set of edges (head_entity, relation, tail_entity), where an edge may carry a qualifier (key, value) such as a time.";

fn language_rules(registry: &FunctionRegistry) -> String {
    let cmp: Vec<&str> = registry.comparator_params().iter().map(String::as_str).collect();
    format!(
        "A query is a sequence of steps, one per line, each of the form\n\
         queryN = function(parameter=value, ...)\n\
         Steps are numbered from query1. Each step calls exactly one function; calls must not be nested. \
         Quote text values, write numbers without quotes, and use output_of_queryN to refer to the result of an earlier step.\n\
         Available functions:\n{}\n\
         The comparators <, >, <= and >= may only be used with {}; every other parameter takes =.",
        registry.describe(),
        cmp.join(" and ")
    )
}

fn demo_block(demos: &[Demonstration], render: impl Fn(&Demonstration) -> String) -> String {
    if demos.is_empty() {
        return "Examples:\n(none)".to_string();
    }
    let body: Vec<String> = demos.iter().map(render).collect();
    format!("Examples:\n\n{}", body.join("\n\n"))
}

fn with_schema(demo: &Demonstration, text: String) -> String {
    if demo.schema.trim().is_empty() {
        text
    } else {
        format!("Schema:\n{}\n{text}", demo.schema.trim_end())
    }
}

/// Query-generation prompt: instructions and registry in the system turn,
/// examples, schema and question in the user turn.
pub fn build_query_prompt(
    question: &str,
    schema: &SchemaDescriptor,
    registry: &FunctionRegistry,
    demos: &[Demonstration],
) -> Vec<ChatMessage> {
    let system = format!(
        "You answer questions over structured data by writing queries.\n{DATA_MODEL}\n{}",
        language_rules(registry)
    );
    let examples = demo_block(demos, |d| {
        with_schema(d, format!("Question: {}\nQuery:\n{}", d.question.trim(), d.plan.trim()))
    });
    let user = format!(
        "{examples}\n\nSchema:\n{}\n\nQuestion: {}\nQuery:",
        schema.render(),
        question.trim()
    );
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}

/// One earlier failed attempt, used only in full-history mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt<'a> {
    pub plan_text: &'a str,
    pub error: &'a EpmError,
}

/// Error-correction prompt carrying the latest wrong query and its error.
pub fn build_correction_prompt(
    question: &str,
    schema: &SchemaDescriptor,
    registry: &FunctionRegistry,
    wrong_plan: &str,
    error: &EpmError,
    demos: &[Demonstration],
) -> Vec<ChatMessage> {
    build_correction_prompt_with_history(question, schema, registry, &[], wrong_plan, error, demos)
}

/// As [`build_correction_prompt`], also listing `earlier` attempts.
pub fn build_correction_prompt_with_history(
    question: &str,
    schema: &SchemaDescriptor,
    registry: &FunctionRegistry,
    earlier: &[Attempt<'_>],
    wrong_plan: &str,
    error: &EpmError,
    demos: &[Demonstration],
) -> Vec<ChatMessage> {
    let system = format!(
        "You fix queries over structured data.\n{DATA_MODEL}\n{}\n\
         You are given a question, the data schema, a query that failed and the error message it produced. \
         First write a short analysis of what caused the error. Then write the corrected complete query, one step per line, starting from query1.",
        language_rules(registry)
    );
    let usable: Vec<Demonstration> = demos.iter().filter(|d| d.correction.is_some()).cloned().collect();
    let examples = demo_block(&usable, |d| {
        let c = d.correction.as_ref().expect("filtered above");
        with_schema(
            d,
            format!(
                "Question: {}\nWrong query:\n{}\nError: {}\nAnalysis: {}\nCorrected query:\n{}",
                d.question.trim(),
                c.wrong_plan.trim(),
                c.error_message.trim(),
                c.analysis.trim(),
                d.plan.trim()
            ),
        )
    });
    let mut user = format!("{examples}\n\nSchema:\n{}\n\nQuestion: {}\n", schema.render(), question.trim());
    if !earlier.is_empty() {
        user.push_str("Earlier attempts:\n");
        for (i, a) in earlier.iter().enumerate() {
            user.push_str(&format!(
                "Attempt {}:\n{}\nError: {}\n",
                i + 1,
                a.plan_text.trim(),
                a.error.render_message()
            ));
        }
    }
    user.push_str(&format!(
        "Wrong query:\n{}\nError: {}\nAnalysis:",
        wrong_plan.trim(),
        error.render_message()
    ));
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}
