use std::collections::HashSet;

use super::{parse_plan, ArgValue, DslFailure, FunctionRegistry, ParamRole, QueryPlan, QueryStep};
use crate::epm::{classify, EpmError};
use crate::graph::Comparator;

/// A plan whose every step passed [`validate_plan`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPlan(QueryPlan);

impl ValidatedPlan {
    pub fn plan(&self) -> &QueryPlan {
        &self.0
    }

    pub fn steps(&self) -> &[QueryStep] {
        &self.0.steps
    }

    pub fn into_inner(self) -> QueryPlan {
        self.0
    }
}

/// Per step, in order: function defined, parameter names legal, parameter
/// combination legal, comparators legal, references well-formed.
pub fn validate_plan(plan: QueryPlan, registry: &FunctionRegistry) -> Result<ValidatedPlan, EpmError> {
    for step in &plan.steps {
        check_step(step, registry).map_err(classify)?;
    }
    Ok(ValidatedPlan(plan))
}

pub fn parse_and_validate(text: &str, registry: &FunctionRegistry) -> Result<ValidatedPlan, EpmError> {
    validate_plan(parse_plan(text)?, registry)
}

fn check_step(step: &QueryStep, registry: &FunctionRegistry) -> Result<(), DslFailure> {
    let function = &step.function;
    let sig = registry.get(function).ok_or_else(|| DslFailure::UnknownFunction {
        name: function.clone(),
        registry: registry.names(),
    })?;

    for arg in &step.args {
        if sig.param(&arg.name).is_none() {
            return Err(DslFailure::UnknownParameter {
                function: function.clone(),
                parameter: arg.name.clone(),
                allowed: sig.param_names(),
            });
        }
    }

    let mut assigned = HashSet::new();
    for arg in &step.args {
        if !assigned.insert(arg.name.as_str()) {
            return Err(DslFailure::DuplicateParameter {
                function: function.clone(),
                parameter: arg.name.clone(),
            });
        }
    }
    // Only `=` counts as assigning a value; a comparison is a constraint.
    let equal_bound: HashSet<&str> = step
        .args
        .iter()
        .filter(|a| a.comparator == Comparator::Eq)
        .map(|a| a.name.as_str())
        .collect();
    for combo in &sig.forbidden {
        if combo.iter().all(|p| equal_bound.contains(p.as_str())) {
            return Err(DslFailure::ConflictingParameters {
                function: function.clone(),
                parameters: combo.clone(),
            });
        }
    }
    let missing: Vec<String> = sig
        .required
        .iter()
        .filter(|p| !assigned.contains(p.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(DslFailure::MissingParameters {
            function: function.clone(),
            parameters: missing,
        });
    }
    if !sig.at_least_one_of.is_empty()
        && !sig.at_least_one_of.iter().any(|p| assigned.contains(p.as_str()))
    {
        return Err(DslFailure::NoParameters {
            function: function.clone(),
            parameters: sig.at_least_one_of.clone(),
        });
    }

    for arg in &step.args {
        if arg.comparator != Comparator::Eq && !registry.allows_comparator(&arg.name) {
            return Err(DslFailure::NonEqualComparator {
                function: function.clone(),
                parameter: arg.name.clone(),
                comparator: arg.comparator,
                allowed: registry.comparator_params().to_vec(),
            });
        }
    }

    for arg in &step.args {
        let role = sig.param(&arg.name).map(|p| p.role).unwrap_or(ParamRole::Any);
        match (&arg.value, role) {
            (ArgValue::StepRef(target), _) if *target == 0 || *target >= step.index => {
                return Err(DslFailure::ForwardReference {
                    step: step.index,
                    target: *target,
                    text: arg.value.to_string(),
                });
            }
            (ArgValue::Literal(_), ParamRole::Set) => {
                return Err(DslFailure::ReferenceExpected {
                    function: function.clone(),
                    parameter: arg.name.clone(),
                    text: arg.value.to_string(),
                });
            }
            (ArgValue::StepRef(_), ParamRole::Literal) => {
                return Err(DslFailure::LiteralExpected {
                    function: function.clone(),
                    parameter: arg.name.clone(),
                    text: arg.value.to_string(),
                });
            }
            _ => {}
        }
    }
    Ok(())
}
