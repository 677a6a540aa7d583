use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// A worked example shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Demonstration {
    pub question: String,
    #[serde(default)]
    pub schema: String,
    /// The correct plan.
    pub plan: String,
    /// Present on demonstrations usable in correction prompts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionExample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorrectionExample {
    pub wrong_plan: String,
    pub error_message: String,
    pub analysis: String,
}

fn tokens(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Token-set Jaccard similarity; two empty texts score 1.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Ranks `pool` by similarity to `question`, keeps the best `k_retrieve`
/// distinct demonstrations and returns the first `k_use` of them. Ties keep
/// pool order.
pub fn retrieve_demos_by<F>(
    question: &str,
    pool: &[Demonstration],
    k_retrieve: usize,
    k_use: usize,
    similarity: F,
) -> Vec<Demonstration>
where
    F: Fn(&str, &str) -> f64,
{
    let mut seen = HashSet::new();
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for (i, d) in pool.iter().enumerate() {
        if seen.insert(d) {
            scored.push((similarity(question, &d.question), i));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let k_use = k_use.min(k_retrieve);
    scored
        .into_iter()
        .take(k_retrieve)
        .take(k_use)
        .map(|(_, i)| pool[i].clone())
        .collect()
}

pub fn retrieve_demos(question: &str, pool: &[Demonstration], k_retrieve: usize, k_use: usize) -> Vec<Demonstration> {
    retrieve_demos_by(question, pool, k_retrieve, k_use, jaccard)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(q: &str) -> Demonstration {
        Demonstration {
            question: q.into(),
            schema: String::new(),
            plan: "query1 = get_information(relation='a')".into(),
            correction: None,
        }
    }

    #[test]
    fn jaccard_values() {
        assert_eq!(jaccard("how many cities", "How many cities?"), 1.0);
        assert_eq!(jaccard("a b", "b c"), 1.0 / 3.0);
        assert_eq!(jaccard("a", "b"), 0.0);
    }

    #[test]
    fn clamps_and_ranks() {
        assert_eq!(retrieve_demos("x", &[demo("y")], 15, 8).len(), 1);
        assert!(retrieve_demos("x", &[], 15, 8).is_empty());
        let pool = vec![demo("who is the oldest"), demo("how many players are from utah"), demo("who is the oldest")];
        let got = retrieve_demos("how many players are from utah", &pool, 15, 8);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].question, "how many players are from utah");
    }
}
