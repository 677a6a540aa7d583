//! Brute-force reference evaluator for plans over small graphs.
//!
//! Works on its own value type and scans every edge for every step; no
//! indexes, no shared helpers with the executor.

use structqa::dsl::{ArgValue, Literal, QueryPlan, QueryStep};
use structqa::graph::{Comparator, Edge, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum V {
    Ent(String),
    Num(f64),
    Year(i32),
}

impl V {
    pub fn from_scalar(s: &Scalar) -> V {
        match s {
            Scalar::Text(t) => V::Ent(t.clone()),
            Scalar::Number(n) => V::Num(*n),
            Scalar::Date(d) => V::Year(d.year),
        }
    }

    fn label(&self) -> String {
        match self {
            V::Ent(t) => t.clone(),
            V::Num(n) if n.fract() == 0.0 => format!("{}", *n as i64),
            V::Num(n) => format!("{n}"),
            V::Year(y) => y.to_string(),
        }
    }

    fn same(&self, other: &V) -> bool {
        match (self, other) {
            (V::Ent(a), V::Ent(b)) => a == b,
            (V::Num(a), V::Num(b)) => (a - b).abs() < 1e-9,
            (V::Year(a), V::Year(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Answer(Vec<V>),
    Runtime { step: usize },
    Empty { step: usize },
}

/// Same members, ignoring order; numbers within 1e-9.
pub fn same_set(a: &[V], b: &[V]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x.same(y))) && b.iter().all(|y| a.iter().any(|x| x.same(y)))
}

fn insert(set: &mut Vec<V>, v: V) {
    if !set.iter().any(|x| x.same(&v)) {
        set.push(v);
    }
}

fn holds(cmp: Comparator, a: f64, b: f64) -> bool {
    match cmp {
        Comparator::Eq => a == b,
        Comparator::Lt => a < b,
        Comparator::Gt => a > b,
        Comparator::Le => a <= b,
        Comparator::Ge => a >= b,
    }
}

/// `stored cmp probe`; `Err` where the comparison is undefined.
fn compare(stored: &V, cmp: Comparator, probe: &V) -> Result<bool, ()> {
    match (stored, probe) {
        (V::Ent(s), p) => {
            if cmp == Comparator::Eq {
                Ok(s.to_lowercase() == p.label().to_lowercase())
            } else {
                Err(())
            }
        }
        (V::Num(s), V::Num(p)) => Ok(holds(cmp, *s, *p)),
        (V::Year(s), V::Num(p)) => Ok(holds(cmp, *s as f64, *p)),
        (V::Num(_), _) | (V::Year(_), _) => {
            if cmp == Comparator::Eq {
                Ok(false)
            } else {
                Err(())
            }
        }
    }
}

struct Env<'a> {
    edges: &'a [Edge],
    results: Vec<Vec<V>>,
}

impl Env<'_> {
    fn probes(&self, value: &ArgValue) -> Vec<V> {
        match value {
            ArgValue::Literal(Literal::Text(t)) => vec![V::Ent(t.clone())],
            ArgValue::Literal(Literal::Number(n)) => vec![V::Num(*n)],
            ArgValue::StepRef(n) => self.results[n - 1].clone(),
        }
    }

    fn set(&self, step: &QueryStep, name: &str) -> Vec<V> {
        match &step.arg(name).expect("set argument").value {
            ArgValue::StepRef(n) => self.results[n - 1].clone(),
            other => panic!("literal set {other}"),
        }
    }

    fn text(step: &QueryStep, name: &str) -> Option<String> {
        step.arg(name).map(|a| match &a.value {
            ArgValue::Literal(Literal::Text(t)) => t.clone(),
            other => panic!("expected text, got {other}"),
        })
    }

    fn get_information(&self, step: &QueryStep) -> Result<Vec<V>, ()> {
        let heads = step.arg("head_entity").map(|a| self.probes(&a.value));
        let relation = Self::text(step, "relation");
        let tail = step.arg("tail_entity").map(|a| (a.comparator, self.probes(&a.value)));
        let key = Self::text(step, "key");
        let value = step.arg("value").map(|a| (a.comparator, self.probes(&a.value)));

        let mut out = Vec::new();
        for e in self.edges {
            if let Some(hs) = &heads {
                if !hs.iter().any(|h| h.label().to_lowercase() == e.head.to_lowercase()) {
                    continue;
                }
            }
            if let Some(r) = &relation {
                if r.to_lowercase() != e.relation.to_lowercase() {
                    continue;
                }
            }
            if let Some((cmp, probes)) = &tail {
                let stored = V::from_scalar(&e.tail);
                let mut hit = false;
                for p in probes {
                    hit |= compare(&stored, *cmp, p)?;
                }
                if !hit {
                    continue;
                }
            }
            if key.is_some() || value.is_some() {
                let Some(q) = &e.qualifier else { continue };
                if let Some(k) = &key {
                    if k.to_lowercase() != q.key.to_lowercase() {
                        continue;
                    }
                }
                if let Some((cmp, probes)) = &value {
                    let stored = V::from_scalar(&q.value);
                    let mut hit = false;
                    for p in probes {
                        hit |= compare(&stored, *cmp, p)?;
                    }
                    if !hit {
                        continue;
                    }
                }
            }
            let projected = if key.is_some() && value.is_none() {
                V::from_scalar(&e.qualifier.as_ref().unwrap().value)
            } else if heads.is_some() {
                V::from_scalar(&e.tail)
            } else if tail.is_some() || value.is_some() {
                V::Ent(e.head.clone())
            } else {
                V::from_scalar(&e.tail)
            };
            insert(&mut out, projected);
        }
        Ok(out)
    }

    fn keep(&self, step: &QueryStep) -> Result<Vec<V>, ()> {
        let input = self.set(step, "set");
        let key = Self::text(step, "key").unwrap();
        let arg = step.arg("value").unwrap();
        let probes = self.probes(&arg.value);
        let mut out = Vec::new();
        for entity in input {
            let mut hit = false;
            for e in self.edges {
                if e.head.to_lowercase() != entity.label().to_lowercase() || e.relation.to_lowercase() != key.to_lowercase() {
                    continue;
                }
                for p in &probes {
                    hit |= compare(&V::from_scalar(&e.tail), arg.comparator, p)?;
                }
            }
            if hit {
                out.push(entity);
            }
        }
        Ok(out)
    }

    fn numbers(set: &[V]) -> Result<Vec<f64>, ()> {
        set.iter()
            .map(|v| match v {
                V::Num(n) => Ok(*n),
                _ => Err(()),
            })
            .collect()
    }

    fn extreme(set: &[V], max: bool) -> Result<V, ()> {
        if set.is_empty() {
            return Err(());
        }
        if let Ok(ns) = Self::numbers(set) {
            let pick = ns.into_iter().fold(None, |acc: Option<f64>, n| match acc {
                Some(a) if (max && a >= n) || (!max && a <= n) => Some(a),
                _ => Some(n),
            });
            return Ok(V::Num(pick.unwrap()));
        }
        let years: Result<Vec<i32>, ()> = set
            .iter()
            .map(|v| match v {
                V::Year(y) => Ok(*y),
                _ => Err(()),
            })
            .collect();
        let years = years?;
        Ok(V::Year(if max {
            *years.iter().max().unwrap()
        } else {
            *years.iter().min().unwrap()
        }))
    }

    fn step(&self, step: &QueryStep) -> Result<Vec<V>, ()> {
        match step.function.as_str() {
            "get_information" => self.get_information(step),
            "keep" => self.keep(step),
            "count" => Ok(vec![V::Num(self.set(step, "set").len() as f64)]),
            "sum" => Ok(vec![V::Num(Self::numbers(&self.set(step, "set"))?.iter().sum())]),
            "mean" => {
                let ns = Self::numbers(&self.set(step, "set"))?;
                if ns.is_empty() {
                    return Err(());
                }
                Ok(vec![V::Num(ns.iter().sum::<f64>() / ns.len() as f64)])
            }
            "min" => Ok(vec![Self::extreme(&self.set(step, "set"), false)?]),
            "max" => Ok(vec![Self::extreme(&self.set(step, "set"), true)?]),
            "set_intersection" | "set_union" | "set_difference" => {
                let a = self.set(step, "set1");
                let b = self.set(step, "set2");
                let in_b = |x: &V| b.iter().any(|y| y.same(x));
                let mut out = Vec::new();
                match step.function.as_str() {
                    "set_intersection" => a.iter().filter(|x| in_b(x)).for_each(|x| insert(&mut out, x.clone())),
                    "set_difference" => a.iter().filter(|x| !in_b(x)).for_each(|x| insert(&mut out, x.clone())),
                    _ => a.iter().chain(b.iter()).for_each(|x| insert(&mut out, x.clone())),
                }
                Ok(out)
            }
            "set_negation" => {
                let s = self.set(step, "set");
                let mut out = Vec::new();
                for e in self.edges {
                    let h = V::Ent(e.head.clone());
                    if !s.iter().any(|x| x.same(&h)) {
                        insert(&mut out, h);
                    }
                }
                Ok(out)
            }
            other => panic!("oracle has no {other}"),
        }
    }
}

/// Evaluates a parsed plan by scanning `edges` for every step.
pub fn evaluate(plan: &QueryPlan, edges: &[Edge]) -> OracleOutcome {
    let mut env = Env {
        edges,
        results: Vec::new(),
    };
    for (i, step) in plan.steps.iter().enumerate() {
        match env.step(step) {
            Err(()) => return OracleOutcome::Runtime { step: step.index },
            Ok(values) => {
                if values.is_empty() && i + 1 < plan.steps.len() {
                    return OracleOutcome::Empty { step: step.index };
                }
                env.results.push(values);
            }
        }
    }
    OracleOutcome::Answer(env.results.pop().unwrap_or_default())
}
