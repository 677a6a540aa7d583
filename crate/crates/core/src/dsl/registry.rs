use serde::{Deserialize, Serialize};

/// What kind of value a parameter accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    /// Must be `output_of_queryN`.
    Set,
    /// Must be a quoted string or numeral.
    Literal,
    /// Either.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub role: ParamRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Signature {
    /// Legal parameter names, in documentation order.
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub required: Vec<String>,
    /// When non-empty, at least one of these must be assigned.
    #[serde(default)]
    pub at_least_one_of: Vec<String>,
    /// Parameter sets that may not all be assigned together.
    #[serde(default)]
    pub forbidden: Vec<Vec<String>>,
}

impl Signature {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }
}

fn spec(name: &str, role: ParamRole) -> ParamSpec {
    ParamSpec {
        name: name.to_string(),
        role,
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Callable functions and their signatures, in registry order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRegistry {
    entries: Vec<(String, Signature)>,
    /// Parameters on which `<`, `>`, `<=`, `>=` are legal.
    comparator_params: Vec<String>,
}

impl FunctionRegistry {
    pub fn new(entries: Vec<(String, Signature)>, comparator_params: Vec<String>) -> Self {
        Self {
            entries,
            comparator_params,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Signature> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn entries(&self) -> &[(String, Signature)] {
        &self.entries
    }

    pub fn comparator_params(&self) -> &[String] {
        &self.comparator_params
    }

    pub fn allows_comparator(&self, param: &str) -> bool {
        self.comparator_params.iter().any(|p| p == param)
    }

    /// Adds or replaces a function, keeping registry order for existing names.
    pub fn insert(&mut self, name: impl Into<String>, signature: Signature) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = signature,
            None => self.entries.push((name, signature)),
        }
    }

    /// One line per function, used in prompts.
    pub fn describe(&self) -> String {
        self.entries
            .iter()
            .map(|(name, sig)| {
                let params: Vec<String> = sig
                    .params
                    .iter()
                    .map(|p| {
                        let shape = match p.role {
                            ParamRole::Set => "output_of_queryN",
                            ParamRole::Literal => "value",
                            ParamRole::Any => "value|output_of_queryN",
                        };
                        format!("{}={shape}", p.name)
                    })
                    .collect();
                format!("- {name}({})", params.join(", "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        use ParamRole::*;
        let gi_params = ["head_entity", "relation", "tail_entity", "key", "value"];
        let gi = Signature {
            params: vec![
                spec("head_entity", Any),
                spec("relation", Literal),
                spec("tail_entity", Any),
                spec("key", Literal),
                spec("value", Any),
            ],
            required: vec![],
            at_least_one_of: strings(&gi_params),
            forbidden: vec![strings(&["head_entity", "relation", "tail_entity"])],
        };
        let unary = || Signature {
            params: vec![spec("set", Set)],
            required: strings(&["set"]),
            ..Signature::default()
        };
        let binary = || Signature {
            params: vec![spec("set1", Set), spec("set2", Set)],
            required: strings(&["set1", "set2"]),
            ..Signature::default()
        };
        let keep = Signature {
            params: vec![spec("set", Set), spec("key", Literal), spec("value", Any)],
            required: strings(&["set", "key", "value"]),
            ..Signature::default()
        };
        let entries = vec![
            ("get_information".to_string(), gi),
            ("min".to_string(), unary()),
            ("mean".to_string(), unary()),
            ("max".to_string(), unary()),
            ("count".to_string(), unary()),
            ("sum".to_string(), unary()),
            ("keep".to_string(), keep),
            ("set_intersection".to_string(), binary()),
            ("set_union".to_string(), binary()),
            ("set_negation".to_string(), unary()),
            ("set_difference".to_string(), binary()),
        ];
        Self::new(entries, strings(&["tail_entity", "value"]))
    }
}
