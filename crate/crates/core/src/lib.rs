//! Structured-data question answering over a condition graph, with typed
//! query errors, an error-guided self-correction loop, and distillation data
//! generation from correction traces.

pub mod answer;
pub mod correction;
pub mod distill;
pub mod dsl;
pub mod epm;
pub mod executor;
pub mod graph;
pub mod harness;
pub mod jsonl;
pub mod llm;
pub mod suite;
