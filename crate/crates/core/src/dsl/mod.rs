//! The first-layer query language.
//!
//! A query is one atomic function call per line:
//!
//! ```text
//! query1 = get_information(relation='Colleges', tail_entity='Utah')
//! query2 = count(set=output_of_query1)
//! ```
//!
//! [`parse_plan`] recognizes call syntax and tokenizes arguments;
//! [`validate_plan`] checks each step against a [`FunctionRegistry`].

mod parser;
mod registry;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::scalar::format_number;
use crate::graph::{Comparator, Scalar};

pub use parser::parse_plan;
pub use registry::{FunctionRegistry, ParamRole, ParamSpec, Signature};
pub use validate::{parse_and_validate, validate_plan, ValidatedPlan};

/// A literal argument value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Text(String),
    Number(f64),
}

impl Literal {
    pub fn to_scalar(&self) -> Scalar {
        match self {
            Literal::Text(t) => Scalar::Text(t.clone()),
            Literal::Number(n) => Scalar::number(*n),
        }
    }
}

/// Right-hand side of an argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArgValue {
    Literal(Literal),
    /// `output_of_queryN`
    StepRef(usize),
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Literal(Literal::Text(t)) if t.contains('\'') => write!(f, "\"{t}\""),
            ArgValue::Literal(Literal::Text(t)) => write!(f, "'{t}'"),
            ArgValue::Literal(Literal::Number(n)) => f.write_str(&format_number(*n)),
            ArgValue::StepRef(n) => write!(f, "output_of_query{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub name: String,
    pub comparator: Comparator,
    pub value: ArgValue,
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.name, self.comparator, self.value)
    }
}

/// One atomic function call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryStep {
    /// 1-based.
    pub index: usize,
    pub function: String,
    pub args: Vec<Arg>,
}

impl QueryStep {
    pub fn arg(&self, name: &str) -> Option<&Arg> {
        self.args.iter().find(|a| a.name == name)
    }
}

impl fmt::Display for QueryStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query{} = {}(", self.index, self.function)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// An ordered list of steps, numbered `1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub steps: Vec<QueryStep>,
    pub raw_text: String,
}

impl QueryPlan {
    /// Canonical text: one step per line, parameters in written order.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Why a query failed to parse or validate, before classification.
#[derive(Debug, Clone, PartialEq)]
pub enum DslFailure {
    EmptyQuery,
    MalformedStep {
        text: String,
    },
    StepNumber {
        expected: usize,
        text: String,
    },
    NestedCall {
        outer: String,
        inner: String,
    },
    UnparsableValue {
        text: String,
    },
    UnknownFunction {
        name: String,
        registry: Vec<String>,
    },
    UnknownParameter {
        function: String,
        parameter: String,
        allowed: Vec<String>,
    },
    ConflictingParameters {
        function: String,
        parameters: Vec<String>,
    },
    DuplicateParameter {
        function: String,
        parameter: String,
    },
    MissingParameters {
        function: String,
        parameters: Vec<String>,
    },
    NoParameters {
        function: String,
        parameters: Vec<String>,
    },
    NonEqualComparator {
        function: String,
        parameter: String,
        comparator: Comparator,
        allowed: Vec<String>,
    },
    ForwardReference {
        step: usize,
        target: usize,
        text: String,
    },
    ReferenceExpected {
        function: String,
        parameter: String,
        text: String,
    },
    LiteralExpected {
        function: String,
        parameter: String,
        text: String,
    },
}
