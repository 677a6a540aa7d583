#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;
pub mod table1;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structqa::epm::ErrorKind;
use structqa::graph::{ConditionGraph, DateValue, Edge, Scalar, SourceKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &["Utah", "Texas", "New York", "Alice", "Bob", "O Brien", "x", "Colleges", "Age", "time"];
const RELATIONS: &[&str] = &["Colleges", "Hometown", "Age", "born_in", "president_of", "Team"];
const FOREIGN_NAMES: &[&str] = &["subtract", "add", "argmax", "total", "lookup", "avg", "filter", "getinformation"];
const FOREIGN_PARAMS: &[&str] = &["sets", "entity", "limit", "name", "set3", "head", "keys"];
const CMPS: &[&str] = &["=", "<", ">", "<=", ">="];

#[derive(Debug, Clone)]
pub struct GenArg {
    pub name: String,
    pub cmp: String,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct GenStep {
    pub number: usize,
    pub function: String,
    pub args: Vec<GenArg>,
    pub tight: bool,
}

/// A plan kept as parts so it can be mutated before rendering.
#[derive(Debug, Clone)]
pub struct GenPlan {
    pub steps: Vec<GenStep>,
}

impl GenPlan {
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .map(|s| {
                let args: Vec<String> = s
                    .args
                    .iter()
                    .map(|a| {
                        if s.tight {
                            format!("{}{}{}", a.name, a.cmp, a.value)
                        } else {
                            format!("{} {} {}", a.name, a.cmp, a.value)
                        }
                    })
                    .collect();
                let sep = if s.tight { "," } else { ", " };
                format!("query{} = {}({})", s.number, s.function, args.join(sep))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn quoted(rng: &mut ChaCha8Rng, word: &str) -> String {
    if rng.gen_bool(0.8) {
        format!("'{word}'")
    } else {
        format!("\"{word}\"")
    }
}

fn number_literal(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.7) {
        rng.gen_range(-5..3000).to_string()
    } else {
        format!("{}.{}", rng.gen_range(0..100), rng.gen_range(1..10))
    }
}

fn literal(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.5) {
        let w = *WORDS.choose(rng).unwrap();
        quoted(rng, w)
    } else {
        number_literal(rng)
    }
}

fn reference(rng: &mut ChaCha8Rng, before: usize) -> String {
    format!("output_of_query{}", rng.gen_range(1..before))
}

fn arg(name: &str, cmp: &str, value: String) -> GenArg {
    GenArg {
        name: name.into(),
        cmp: cmp.into(),
        value,
    }
}

fn gen_get_information(rng: &mut ChaCha8Rng, number: usize) -> Vec<GenArg> {
    let mut args = Vec::new();
    loop {
        let head = rng.gen_bool(0.4);
        let relation = rng.gen_bool(0.8);
        let tail = rng.gen_bool(0.5);
        let key = rng.gen_bool(0.2);
        let value = key && rng.gen_bool(0.6) || rng.gen_bool(0.05);
        if !(head || relation || tail || key || value) || (head && relation && tail) {
            continue;
        }
        if head {
            let v = if number > 1 && rng.gen_bool(0.5) {
                reference(rng, number)
            } else {
                let w = *WORDS.choose(rng).unwrap();
                quoted(rng, w)
            };
            args.push(arg("head_entity", "=", v));
        }
        if relation {
            let w = *RELATIONS.choose(rng).unwrap();
            args.push(arg("relation", "=", quoted(rng, w)));
        }
        if tail {
            let cmp = *CMPS.choose(rng).unwrap();
            let v = if cmp == "=" && number > 1 && rng.gen_bool(0.3) {
                reference(rng, number)
            } else {
                literal(rng)
            };
            args.push(arg("tail_entity", cmp, v));
        }
        if key {
            args.push(arg("key", "=", quoted(rng, "time")));
        }
        if value {
            let cmp = *CMPS.choose(rng).unwrap();
            args.push(arg("value", cmp, number_literal(rng)));
        }
        break;
    }
    args.shuffle(rng);
    args
}

fn gen_step(rng: &mut ChaCha8Rng, number: usize) -> GenStep {
    let function = if number == 1 {
        "get_information"
    } else {
        *[
            "get_information",
            "min",
            "mean",
            "max",
            "count",
            "sum",
            "keep",
            "set_intersection",
            "set_union",
            "set_negation",
            "set_difference",
        ]
        .choose(rng)
        .unwrap()
    };
    let mut args = match function {
        "get_information" => gen_get_information(rng, number),
        "keep" => {
            let w = *RELATIONS.choose(rng).unwrap();
            vec![
                arg("set", "=", reference(rng, number)),
                arg("key", "=", quoted(rng, w)),
                arg("value", CMPS.choose(rng).unwrap(), literal(rng)),
            ]
        }
        "set_intersection" | "set_union" | "set_difference" => vec![
            arg("set1", "=", reference(rng, number)),
            arg("set2", "=", reference(rng, number)),
        ],
        _ => vec![arg("set", "=", reference(rng, number))],
    };
    if function != "get_information" {
        args.shuffle(rng);
    }
    GenStep {
        number,
        function: function.to_string(),
        args,
        tight: rng.gen_bool(0.3),
    }
}

/// A plan of 1 to 5 steps that parses and validates cleanly.
pub fn valid_plan(rng: &mut ChaCha8Rng) -> GenPlan {
    let n = rng.gen_range(1..=5);
    GenPlan {
        steps: (1..=n).map(|i| gen_step(rng, i)).collect(),
    }
}

/// The six parsing-error kinds targeted by [`mutate`].
pub const PARSING_KINDS: [ErrorKind; 6] = [
    ErrorKind::UndefinedFunction,
    ErrorKind::IllegalParameter,
    ErrorKind::InconsistentParameters,
    ErrorKind::IllegalComparator,
    ErrorKind::NonAtomicOperation,
    ErrorKind::NonStandardExpression,
];

fn legal_params(function: &str) -> &'static [&'static str] {
    match function {
        "get_information" => &["head_entity", "relation", "tail_entity", "key", "value"],
        "keep" => &["set", "key", "value"],
        "set_intersection" | "set_union" | "set_difference" => &["set1", "set2"],
        _ => &["set"],
    }
}

/// Breaks one step of a valid plan so that it fails with exactly `kind`.
pub fn mutate(rng: &mut ChaCha8Rng, plan: &GenPlan, kind: ErrorKind) -> GenPlan {
    let mut plan = plan.clone();
    let k = rng.gen_range(0..plan.steps.len());
    let step = &mut plan.steps[k];
    let legal = legal_params(&step.function);
    match kind {
        ErrorKind::UndefinedFunction => {
            step.function = FOREIGN_NAMES.choose(rng).unwrap().to_string();
        }
        ErrorKind::IllegalParameter => {
            let name = FOREIGN_PARAMS
                .iter()
                .copied()
                .filter(|p| !legal.contains(p))
                .collect::<Vec<_>>()
                .choose(rng)
                .unwrap()
                .to_string();
            if rng.gen_bool(0.5) {
                let i = rng.gen_range(0..step.args.len());
                step.args[i].name = name;
            } else {
                let at = rng.gen_range(0..=step.args.len());
                step.args.insert(at, arg(&name, "=", "1".into()));
            }
        }
        ErrorKind::InconsistentParameters => {
            let choice = rng.gen_range(0..3);
            if choice == 0 || (choice == 2 && step.function == "get_information") {
                let i = rng.gen_range(0..step.args.len());
                let dup = step.args[i].clone();
                step.args.push(dup);
            } else if step.function == "get_information" {
                step.args = vec![
                    arg("head_entity", "=", "'a'".into()),
                    arg("relation", "=", "'b'".into()),
                    arg("tail_entity", "=", "'c'".into()),
                ];
                step.args.shuffle(rng);
            } else {
                let i = rng.gen_range(0..step.args.len());
                step.args.remove(i);
            }
        }
        ErrorKind::IllegalComparator => {
            let cmp = CMPS[1..].choose(rng).unwrap().to_string();
            let candidates: Vec<usize> = (0..step.args.len())
                .filter(|i| !matches!(step.args[*i].name.as_str(), "tail_entity" | "value"))
                .collect();
            match candidates.choose(rng) {
                Some(&i) => step.args[i].cmp = cmp,
                None => step.args.push(arg("relation", &cmp, "'x'".into())),
            }
        }
        ErrorKind::NonAtomicOperation => {
            let nested = [
                "count(set=output_of_query1)",
                "get_information(relation='Age')",
                "set_negation(output_of_query1)",
                "f(1)",
            ];
            let i = rng.gen_range(0..step.args.len());
            step.args[i].value = nested.choose(rng).unwrap().to_string();
        }
        ErrorKind::NonStandardExpression => {
            let refs: Vec<usize> = (0..step.args.len())
                .filter(|i| step.args[*i].value.starts_with("output_of_query"))
                .collect();
            let i = rng.gen_range(0..step.args.len());
            match rng.gen_range(0..5) {
                0 => step.args[i].value = "[output_of_query1, output_of_query2]".into(),
                1 => step.args[i].value = "Utah".into(),
                2 => step.args[i].value = "'unterminated".into(),
                3 if !refs.is_empty() => {
                    let j = *refs.choose(rng).unwrap();
                    step.args[j].value = format!("output_of_query{}", step.number + rng.gen_range(0..3));
                }
                _ => step.number += 7,
            }
        }
        other => panic!("no mutation for {other}"),
    }
    plan
}

const PEOPLE: &[&str] = &["ann", "bob", "cat", "dan", "eve", "fay", "gus", "hal"];
const CITIES: &[&str] = &["rome", "oslo", "lima"];

/// A random graph of at most `max_edges` edges over a small vocabulary:
/// entity-valued, integer-valued and time-qualified relations.
pub fn random_graph(rng: &mut ChaCha8Rng, max_edges: usize) -> ConditionGraph {
    let n = rng.gen_range(1..=max_edges);
    let mut edges = Vec::with_capacity(n);
    for _ in 0..n {
        let head = *PEOPLE.choose(rng).unwrap();
        let edge = match rng.gen_range(0..5) {
            0 => Edge::new(head, "likes", Scalar::text(*PEOPLE.choose(rng).unwrap())),
            1 => Edge::new(head, "knows", Scalar::text(*PEOPLE.choose(rng).unwrap())),
            2 => Edge::new(head, "age", Scalar::number(rng.gen_range(18..40) as f64)),
            3 => Edge::new(head, "score", Scalar::number(rng.gen_range(0..10) as f64)),
            _ => Edge::new(head, "visited", Scalar::text(*CITIES.choose(rng).unwrap()))
                .with_qualifier("time", Scalar::Date(DateValue::year(rng.gen_range(1990..2000)))),
        };
        edges.push(edge);
    }
    ConditionGraph::from_edges(SourceKind::TemporalKg, edges)
}

fn any_cmp(rng: &mut ChaCha8Rng) -> &'static str {
    CMPS.choose(rng).unwrap()
}

/// A random executable plan of at most `max_steps` steps over the vocabulary
/// of [`random_graph`]. Plans validate; some fail at run time by design.
pub fn random_exec_plan(rng: &mut ChaCha8Rng, max_steps: usize) -> String {
    let n = rng.gen_range(1..=max_steps);
    let mut lines = Vec::new();
    for i in 1..=n {
        let r = |rng: &mut ChaCha8Rng| rng.gen_range(1..i);
        let body = if i == 1 || rng.gen_bool(0.3) {
            let rel = *["likes", "knows", "age", "score", "visited"].choose(rng).unwrap();
            match rng.gen_range(0..7) {
                0 => format!("get_information(relation='{rel}', tail_entity='{}')", PEOPLE.choose(rng).unwrap()),
                1 => format!("get_information(relation='{rel}', tail_entity{}{})", any_cmp(rng), rng.gen_range(15..42)),
                2 if i > 1 => format!("get_information(head_entity=output_of_query{}, relation='{rel}')", r(rng)),
                2 | 3 => format!("get_information(head_entity='{}', relation='{rel}')", PEOPLE.choose(rng).unwrap()),
                4 => format!("get_information(relation='{rel}')"),
                5 => format!(
                    "get_information(relation='visited', tail_entity='{}', key='time', value{}{})",
                    CITIES.choose(rng).unwrap(),
                    any_cmp(rng),
                    rng.gen_range(1989..2001)
                ),
                _ => "get_information(relation='visited', key='time')".to_string(),
            }
        } else {
            match rng.gen_range(0..6) {
                0 => format!("{}(set=output_of_query{})", ["count", "sum", "mean", "min", "max"].choose(rng).unwrap(), r(rng)),
                1 | 2 => format!(
                    "{}(set1=output_of_query{}, set2=output_of_query{})",
                    ["set_intersection", "set_union", "set_difference"].choose(rng).unwrap(),
                    r(rng),
                    r(rng)
                ),
                3 => format!("set_negation(set=output_of_query{})", r(rng)),
                _ => format!(
                    "keep(set=output_of_query{}, key='{}', value{}{})",
                    r(rng),
                    ["age", "score", "likes"].choose(rng).unwrap(),
                    any_cmp(rng),
                    rng.gen_range(0..40)
                ),
            }
        };
        lines.push(format!("query{i} = {body}"));
    }
    lines.join("\n")
}

/// Runs the bundled suite in `mode` against its recorded script.
pub fn mini_eval(mode: structqa::harness::EvalMode) -> structqa::harness::Evaluation {
    use structqa::dsl::FunctionRegistry;
    use structqa::harness::{evaluate, PipelineConfig};
    use structqa::llm::{ScriptMode, ScriptedClient};
    use structqa::suite::MiniSuite;

    let suite = MiniSuite::bundled().expect("bundled suite loads");
    let client = ScriptedClient::from_path(&suite.script_path(), ScriptMode::Keyed).expect("script loads");
    evaluate(
        &suite.questions,
        &suite.catalog,
        &FunctionRegistry::default(),
        &suite.demos,
        &client,
        &PipelineConfig::default(),
        mode,
    )
    .expect("evaluation runs")
}

/// One JSON object per line.
pub fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect()
}
