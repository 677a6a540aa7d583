//! Scripted correction-loop fixtures over the people table.

use structqa::correction::{run_correction_with, Author, CorrectionTrace, Demonstration, LoopConfig, QaContext, Question};
use structqa::dsl::FunctionRegistry;
use structqa::graph::{schema_summary, ConditionGraph, Scalar, SchemaDescriptor};
use structqa::llm::{ScriptEntry, ScriptMode, ScriptedClient};

use super::table1::people;

pub struct Bench {
    pub graph: ConditionGraph,
    pub schema: SchemaDescriptor,
    pub registry: FunctionRegistry,
    pub demos: Vec<Demonstration>,
}

impl Bench {
    pub fn people() -> Self {
        let graph = people();
        let schema = schema_summary(&graph);
        Self {
            graph,
            schema,
            registry: FunctionRegistry::default(),
            demos: Vec::new(),
        }
    }

    pub fn ctx(&self) -> QaContext<'_> {
        QaContext {
            graph: &self.graph,
            schema: &self.schema,
            registry: &self.registry,
            demos: &self.demos,
        }
    }
}

pub fn config() -> LoopConfig {
    LoopConfig {
        mct: 3,
        self_consistency: 1,
        ..LoopConfig::default()
    }
}

/// A question plus the replies handed out in call order: the initial query
/// first, then one per correction round.
pub struct Fixture {
    pub name: &'static str,
    pub question: Question,
    pub author: Author,
    pub replies: Vec<&'static str>,
}

fn question(id: &str, text: &str, gold: Vec<Scalar>) -> Question {
    Question {
        id: id.into(),
        text: text.into(),
        gold: Some(gold),
        graph_ref: "people".into(),
    }
}

pub const TOTAL_AGE_FINAL: &str = "query1 = get_information(relation='Hometown', tail_entity='Texas')\n\
query2 = get_information(head_entity=output_of_query1, relation='Age')\n\
query3 = sum(set=output_of_query2)";

pub fn direct() -> Fixture {
    Fixture {
        name: "direct",
        question: question("f1", "How many people are from Texas?", vec![Scalar::number(2.0)]),
        author: Author::Teacher,
        replies: vec!["query1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = count(set=output_of_query1)"],
    }
}

pub fn one_round(author: Author) -> Fixture {
    Fixture {
        name: "one_round",
        question: question("f2", "Which people went to college in Utah?", vec![Scalar::text("Alice")]),
        author,
        replies: vec![
            "query1 = get_information(relation='Hometown', tail_entity='Utah')\nquery2 = set_union(set1=output_of_query1, set2=output_of_query1)",
            "Analysis: Utah is where Alice went to college, so the relation is Colleges.\nCorrected query:\nquery1 = get_information(relation='Colleges', tail_entity='Utah')",
        ],
    }
}

pub fn two_rounds() -> Fixture {
    Fixture {
        name: "two_rounds",
        question: question("f3", "What is the total age of people from Texas?", vec![Scalar::number(45.0)]),
        author: Author::Teacher,
        replies: vec![
            "query1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = total(set=output_of_query1)",
            "Analysis: total is not a function; sum adds up a set.\nCorrected query:\nquery1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = sum(set=output_of_query1)",
            "Analysis: output_of_query1 holds people, not ages. Look up their ages first.\nCorrected query:\n```\nquery1 = get_information(relation='Hometown', tail_entity='Texas')\nquery2 = get_information(head_entity=output_of_query1, relation='Age')\nquery3 = sum(set=output_of_query2)\n```",
        ],
    }
}

pub fn failed() -> Fixture {
    Fixture {
        name: "failed",
        question: question("f4", "Which college did Bob attend?", vec![Scalar::text("Ohio")]),
        author: Author::Teacher,
        replies: vec![
            "query1 = get_information(head_entity='Bob', relation='Colleges', tail_entity='Ohio')",
            "Analysis: drop the tail.\nquery1 = get_information(head_entity='Bob', relation='College')\nquery2 = count(set=output_of_query1)",
            "Analysis: use a dedicated function.\nquery1 = college(head_entity='Bob')",
            "Analysis: try again.\nquery1 = get_information(head_entity='Bob', relation=Colleges)",
        ],
    }
}

pub fn gold_mismatch() -> Fixture {
    Fixture {
        name: "gold_mismatch",
        question: question("f5", "Which people went to college in Ohio?", vec![Scalar::text("Bob")]),
        author: Author::Teacher,
        replies: vec!["query1 = get_information(relation='Colleges', tail_entity='Utah')"],
    }
}

pub const MEAN_AGE_FINAL: &str = "query1 = get_information(relation='Colleges', tail_entity='Utah')\n\
query2 = get_information(relation='Colleges', tail_entity='Ohio')\n\
query3 = set_union(set1=output_of_query1, set2=output_of_query2)\n\
query4 = get_information(head_entity=output_of_query3, relation='Age')\n\
query5 = mean(set=output_of_query4)";

/// Solved in the third and last allowed round, each attempt closer to the
/// final query than the one before.
pub fn three_rounds_student() -> Fixture {
    Fixture {
        name: "three_rounds_student",
        question: question(
            "f6",
            "What is the average age of people who went to college in Utah or Ohio?",
            vec![Scalar::number(22.5)],
        ),
        author: Author::Student,
        replies: vec![
            "query1 = average(relation='Colleges')",
            "Analysis: average is not defined; fetch the colleges and take the mean.\nquery1 = get_information(relation='Colleges')\nquery2 = mean(set=output_of_query1)",
            "Analysis: collect the people first.\nquery1 = get_information(relation='Colleges', tail_entity='Utah')\nquery2 = get_information(relation='Colleges', tail_entity='Ohio')\nquery3 = set_union(set1=output_of_query1, set2=output_of_query2)\nquery4 = mean(set=output_of_query3)",
            "Analysis: average their ages, not the people.\nquery1 = get_information(relation='Colleges', tail_entity='Utah')\nquery2 = get_information(relation='Colleges', tail_entity='Ohio')\nquery3 = set_union(set1=output_of_query1, set2=output_of_query2)\nquery4 = get_information(head_entity=output_of_query3, relation='Age')\nquery5 = mean(set=output_of_query4)",
        ],
    }
}

pub fn scripted(replies: &[&str]) -> ScriptedClient {
    let entries = replies
        .iter()
        .map(|r| ScriptEntry {
            key: String::new(),
            reply: r.to_string(),
        })
        .collect();
    ScriptedClient::new(entries, ScriptMode::Ordered)
}

pub fn run(bench: &Bench, fixture: &Fixture) -> CorrectionTrace {
    let client = scripted(&fixture.replies);
    let trace = run_correction_with(&fixture.question, &bench.ctx(), &client, &client, fixture.author, &config())
        .unwrap_or_else(|e| panic!("{}: {e}", fixture.name));
    assert_eq!(client.remaining(), 0, "{} left replies unused", fixture.name);
    trace
}

pub fn all() -> Vec<Fixture> {
    vec![
        direct(),
        one_round(Author::Teacher),
        two_rounds(),
        failed(),
        gold_mismatch(),
        one_round(Author::Student),
        three_rounds_student(),
    ]
}

/// Error in round `i` is the error left by the attempt before it.
pub fn rounds_chain(trace: &CorrectionTrace) -> bool {
    trace.rounds.iter().enumerate().all(|(i, r)| {
        let before = if i == 0 {
            trace.initial_outcome.error.as_ref()
        } else {
            trace.rounds[i - 1].outcome_after.error.as_ref()
        };
        before == Some(&r.error_in)
    })
}
