//! Typed query errors and the customized messages fed back to the model.
//!
//! Every failure raised by the parser, validator or executor classifies into
//! exactly one of eight kinds: six parsing kinds detected before execution
//! and two execution kinds detected while running a plan. Message templates
//! live in [`EpmError::render_message`] and nowhere else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::DslFailure;
use crate::executor::ExecFault;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Parsing,
    Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    UndefinedFunction,
    IllegalParameter,
    InconsistentParameters,
    IllegalComparator,
    NonAtomicOperation,
    NonStandardExpression,
    RuntimeException,
    EmptyMidStepResult,
}

impl ErrorKind {
    /// Taxonomy order: parsing kinds first, then execution kinds.
    pub const ALL: [ErrorKind; 8] = [
        ErrorKind::UndefinedFunction,
        ErrorKind::IllegalParameter,
        ErrorKind::InconsistentParameters,
        ErrorKind::IllegalComparator,
        ErrorKind::NonAtomicOperation,
        ErrorKind::NonStandardExpression,
        ErrorKind::RuntimeException,
        ErrorKind::EmptyMidStepResult,
    ];

    pub fn category(self) -> Category {
        match self {
            ErrorKind::RuntimeException | ErrorKind::EmptyMidStepResult => Category::Execution,
            _ => Category::Parsing,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::UndefinedFunction => "UndefinedFunction",
            ErrorKind::IllegalParameter => "IllegalParameter",
            ErrorKind::InconsistentParameters => "InconsistentParameters",
            ErrorKind::IllegalComparator => "IllegalComparator",
            ErrorKind::NonAtomicOperation => "NonAtomicOperation",
            ErrorKind::NonStandardExpression => "NonStandardExpression",
            ErrorKind::RuntimeException => "RuntimeException",
            ErrorKind::EmptyMidStepResult => "EmptyMidStepResult",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a parameter assignment is inconsistent with the function signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inconsistency {
    /// A forbidden combination was assigned together.
    Conflict,
    /// The same parameter was assigned twice.
    Duplicate,
    /// Required parameters were left unassigned.
    Missing,
    /// None of the listed parameters was assigned.
    NoneAssigned,
}

/// Kind plus the payload its message needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum EpmDetail {
    UndefinedFunction {
        function: String,
        registry: Vec<String>,
    },
    IllegalParameter {
        function: String,
        parameter: String,
        allowed: Vec<String>,
    },
    InconsistentParameters {
        function: String,
        parameters: Vec<String>,
        violation: Inconsistency,
    },
    IllegalComparator {
        function: String,
        parameter: String,
        comparator: String,
        allowed: Vec<String>,
    },
    NonAtomicOperation {
        outer: String,
        inner: String,
    },
    NonStandardExpression {
        text: String,
    },
    RuntimeException {
        function: String,
        fault: String,
    },
    EmptyMidStepResult {
        step: usize,
    },
}

/// A classified query error.
#[derive(Debug, Clone, PartialEq)]
pub struct EpmError {
    detail: EpmDetail,
}

fn quoted_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| format!("'{s}'")).collect();
    format!("[{}]", inner.join(", "))
}

fn quoted_series(items: &[String]) -> String {
    let q: Vec<String> = items.iter().map(|s| format!("'{s}'")).collect();
    match q.len() {
        0 => String::new(),
        1 => format!("parameter {}", q[0]),
        n => format!("parameters {} and {}", q[..n - 1].join(", "), q[n - 1]),
    }
}

impl EpmError {
    pub fn new(detail: EpmDetail) -> Self {
        Self { detail }
    }

    pub fn detail(&self) -> &EpmDetail {
        &self.detail
    }

    pub fn kind(&self) -> ErrorKind {
        match &self.detail {
            EpmDetail::UndefinedFunction { .. } => ErrorKind::UndefinedFunction,
            EpmDetail::IllegalParameter { .. } => ErrorKind::IllegalParameter,
            EpmDetail::InconsistentParameters { .. } => ErrorKind::InconsistentParameters,
            EpmDetail::IllegalComparator { .. } => ErrorKind::IllegalComparator,
            EpmDetail::NonAtomicOperation { .. } => ErrorKind::NonAtomicOperation,
            EpmDetail::NonStandardExpression { .. } => ErrorKind::NonStandardExpression,
            EpmDetail::RuntimeException { .. } => ErrorKind::RuntimeException,
            EpmDetail::EmptyMidStepResult { .. } => ErrorKind::EmptyMidStepResult,
        }
    }

    pub fn category(&self) -> Category {
        self.kind().category()
    }

    pub fn non_standard(text: impl Into<String>) -> Self {
        Self::new(EpmDetail::NonStandardExpression { text: text.into() })
    }

    /// The message shown to the model.
    pub fn render_message(&self) -> String {
        match &self.detail {
            EpmDetail::UndefinedFunction { function, registry } => format!(
                "The function '{function}' is not defined! Please call one of: {}.",
                quoted_list(registry)
            ),
            EpmDetail::IllegalParameter {
                function,
                parameter,
                allowed,
            } => format!(
                "For function '{function}', parameter name '{parameter}' is illegal, the parameter name must be in {}.",
                quoted_list(allowed)
            ),
            EpmDetail::InconsistentParameters {
                function,
                parameters,
                violation,
            } => match violation {
                Inconsistency::Conflict => format!(
                    "For function '{function}', it is not allowed to assign values to parameters {} at the same time.",
                    quoted_list(parameters)
                ),
                Inconsistency::Duplicate => format!(
                    "For function '{function}', parameters {} are assigned more than once.",
                    quoted_list(parameters)
                ),
                Inconsistency::Missing => format!(
                    "For function '{function}', parameters {} must be assigned values.",
                    quoted_list(parameters)
                ),
                Inconsistency::NoneAssigned => format!(
                    "For function '{function}', at least one of parameters {} must be assigned a value.",
                    quoted_list(parameters)
                ),
            },
            EpmDetail::IllegalComparator {
                function,
                parameter,
                comparator,
                allowed,
            } => format!(
                "In function '{function}', comparison symbol '{comparator}' for '{parameter}' is illegal, and non-equal comparators are only allowed for {}.",
                quoted_series(allowed)
            ),
            EpmDetail::NonAtomicOperation { outer, inner } => format!(
                "The query is not an atomic operation: functions '{outer}' and '{inner}' are nested. Please make sure that each step is atomic."
            ),
            EpmDetail::NonStandardExpression { text } => format!(
                "Parsing the passed parameter value '{text}' failed. Please ensure that the format of the query is correct"
            ),
            EpmDetail::RuntimeException { function, fault } => {
                format!("Exception from executor in function '{function}': {fault}")
            }
            EpmDetail::EmptyMidStepResult { step } => format!(
                "For query{step}, the execution result=set(), that is output_of_query{step} is empty, which may affect subsequent query execution and final result. Please verify the correctness of entity or relation."
            ),
        }
    }
}

impl fmt::Display for EpmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_message())
    }
}

impl std::error::Error for EpmError {}

/// Any failure produced by the parser, validator or executor.
#[derive(Debug, Clone, PartialEq)]
pub enum RawFailure {
    Dsl(DslFailure),
    Exec(ExecFault),
}

impl From<DslFailure> for RawFailure {
    fn from(f: DslFailure) -> Self {
        RawFailure::Dsl(f)
    }
}

impl From<ExecFault> for RawFailure {
    fn from(f: ExecFault) -> Self {
        RawFailure::Exec(f)
    }
}

/// Maps a raw failure onto its error kind.
pub fn classify(raw: impl Into<RawFailure>) -> EpmError {
    use DslFailure as D;
    let detail = match raw.into() {
        RawFailure::Dsl(f) => match f {
            D::UnknownFunction { name, registry } => EpmDetail::UndefinedFunction {
                function: name,
                registry,
            },
            D::UnknownParameter {
                function,
                parameter,
                allowed,
            } => EpmDetail::IllegalParameter {
                function,
                parameter,
                allowed,
            },
            D::ConflictingParameters { function, parameters } => EpmDetail::InconsistentParameters {
                function,
                parameters,
                violation: Inconsistency::Conflict,
            },
            D::DuplicateParameter { function, parameter } => EpmDetail::InconsistentParameters {
                function,
                parameters: vec![parameter],
                violation: Inconsistency::Duplicate,
            },
            D::MissingParameters { function, parameters } => EpmDetail::InconsistentParameters {
                function,
                parameters,
                violation: Inconsistency::Missing,
            },
            D::NoParameters { function, parameters } => EpmDetail::InconsistentParameters {
                function,
                parameters,
                violation: Inconsistency::NoneAssigned,
            },
            D::NonEqualComparator {
                function,
                parameter,
                comparator,
                allowed,
            } => EpmDetail::IllegalComparator {
                function,
                parameter,
                comparator: comparator.symbol().to_string(),
                allowed,
            },
            D::NestedCall { outer, inner } => EpmDetail::NonAtomicOperation { outer, inner },
            D::EmptyQuery => EpmDetail::NonStandardExpression { text: String::new() },
            D::MalformedStep { text }
            | D::StepNumber { text, .. }
            | D::UnparsableValue { text }
            | D::ForwardReference { text, .. }
            | D::ReferenceExpected { text, .. }
            | D::LiteralExpected { text, .. } => EpmDetail::NonStandardExpression { text },
        },
        RawFailure::Exec(f) => match f {
            ExecFault::Operand { function, fault } => EpmDetail::RuntimeException { function, fault },
            ExecFault::EmptyMidStep { step } => EpmDetail::EmptyMidStepResult { step },
        },
    };
    EpmError::new(detail)
}

#[derive(Serialize, Deserialize)]
struct EpmErrorRepr {
    category: Category,
    #[serde(flatten)]
    detail: EpmDetail,
    message: String,
}

impl Serialize for EpmError {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        EpmErrorRepr {
            category: self.category(),
            detail: self.detail.clone(),
            message: self.render_message(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EpmError {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = EpmErrorRepr::deserialize(deserializer)?;
        let err = EpmError::new(repr.detail);
        if err.category() != repr.category {
            return Err(serde::de::Error::custom(format!(
                "kind {} does not belong to category {:?}",
                err.kind(),
                repr.category
            )));
        }
        Ok(err)
    }
}
