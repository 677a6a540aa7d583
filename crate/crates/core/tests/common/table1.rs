//! The error-table examples, each embedded in a full plan over a small
//! people table.

use std::path::{Path, PathBuf};

use structqa::epm::ErrorKind;
use structqa::graph::{ingest_table, ConditionGraph, TableOptions};

pub struct Case {
    pub name: &'static str,
    pub kind: ErrorKind,
    pub plan: &'static str,
}

pub const CASES: [Case; 8] = [
    Case {
        name: "undefined_function",
        kind: ErrorKind::UndefinedFunction,
        plan: "query1 = get_information(relation='Colleges', tail_entity='Utah')\n\
               query2 = get_information(relation='Hometown', tail_entity='Texas')\n\
               query3 = subtract(set1=output_of_query1, set2=output_of_query2)",
    },
    Case {
        name: "illegal_parameter",
        kind: ErrorKind::IllegalParameter,
        plan: "query1 = get_information(relation='Age')\nquery2 = max(set=output_of_query1, key='Age')",
    },
    Case {
        name: "inconsistent_parameters",
        kind: ErrorKind::InconsistentParameters,
        plan: "query1 = get_information(head_entity='Alice', relation='Colleges', tail_entity='Utah')",
    },
    Case {
        name: "illegal_comparator",
        kind: ErrorKind::IllegalComparator,
        plan: "query1 = get_information(tail_entity='Utah', relation='Colleges', head_entity<'Bob')",
    },
    Case {
        name: "non_atomic_operation",
        kind: ErrorKind::NonAtomicOperation,
        plan: "query1 = get_information(relation='Age')\nquery2 = sum(set=set_negation(set=output_of_query1))",
    },
    Case {
        name: "non_standard_expression",
        kind: ErrorKind::NonStandardExpression,
        plan: "query1 = get_information(relation='Age', tail_entity>20)\n\
               query2 = get_information(relation='Age', tail_entity<30)\n\
               query3 = sum(set=[output_of_query1, output_of_query2])",
    },
    Case {
        name: "runtime_exception",
        kind: ErrorKind::RuntimeException,
        plan: "query1 = get_information(relation='Colleges')\nquery2 = sum(set=output_of_query1)",
    },
    Case {
        name: "empty_mid_step_result",
        kind: ErrorKind::EmptyMidStepResult,
        plan: "query1 = get_information(relation='Hometown', tail_entity='Utah')\nquery2 = count(set=output_of_query1)",
    },
];

/// Two people; "from" data lives under both Hometown and Colleges.
pub fn people() -> ConditionGraph {
    ingest_table(
        &["Name", "Colleges", "Hometown", "Age"],
        &[
            vec!["Alice", "Utah", "Texas", "20"],
            vec!["Bob", "Ohio", "Texas", "25"],
        ],
        &TableOptions::default(),
    )
    .unwrap()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
