//! The bundled mini benchmark and the playbook client used to record its
//! script.
//!
//! The suite lives in `data/mini`: three toy graphs, twenty questions, a
//! demonstration pool, a playbook of model replies per question, and
//! `script.jsonl`, the digest-keyed replies recorded from that playbook.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::correction::{Demonstration, Question};
use crate::harness::{load_demos, load_questions, GraphCatalog, HarnessError};
use crate::llm::{ChatClient, ChatMessage, ClientError};

/// Path of the bundled suite inside this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("mini")
}

pub struct MiniSuite {
    pub dir: PathBuf,
    pub catalog: GraphCatalog,
    pub questions: Vec<Question>,
    pub demos: Vec<Demonstration>,
}

impl MiniSuite {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        Ok(Self {
            dir: dir.to_path_buf(),
            catalog: GraphCatalog::from_manifest(&dir.join("graphs.toml"))?,
            questions: load_questions(&dir.join("questions.jsonl"))?,
            demos: load_demos(&dir.join("demos.jsonl"))?,
        })
    }

    pub fn bundled() -> Result<Self, HarnessError> {
        Self::load(&bundled_dir())
    }

    pub fn script_path(&self) -> PathBuf {
        self.dir.join("script.jsonl")
    }

    pub fn playbook(&self) -> Result<Playbook, HarnessError> {
        let path = self.dir.join("playbook.json");
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Manifest {
            path,
            message: e.to_string(),
        })
    }
}

/// Replies for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybookEntry {
    /// Replies to the query prompt, cycled when more samples are asked for.
    pub initial: Vec<String>,
    /// Replies to successive correction prompts; the last one repeats.
    #[serde(default)]
    pub corrections: Vec<String>,
}

pub type Playbook = BTreeMap<String, PlaybookEntry>;

/// Answers by looking up which question a prompt is about. Correction
/// prompts are recognized by their system turn.
pub struct PlaybookClient {
    by_text: HashMap<String, PlaybookEntry>,
    calls: Mutex<HashMap<(String, bool), usize>>,
}

const QUESTION_MARK: &str = "\nQuestion: ";

/// The question a prompt asks about: the last `Question:` line.
pub fn prompt_question(messages: &[ChatMessage]) -> Option<&str> {
    let user = messages.iter().rev().find(|m| m.role == crate::llm::Role::User)?;
    let at = user.content.rfind(QUESTION_MARK)? + QUESTION_MARK.len();
    user.content[at..].lines().next()
}

impl PlaybookClient {
    pub fn new(playbook: &Playbook, questions: &[Question]) -> Self {
        let by_text = questions
            .iter()
            .filter_map(|q| playbook.get(&q.id).map(|e| (q.text.trim().to_string(), e.clone())))
            .collect();
        Self {
            by_text,
            calls: Mutex::new(HashMap::new()),
        }
    }
}

impl ChatClient for PlaybookClient {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ClientError> {
        crate::llm::check_request(messages)?;
        let question = prompt_question(messages)
            .ok_or_else(|| ClientError::InvalidRequest("prompt has no question line".into()))?;
        let entry = self
            .by_text
            .get(question.trim())
            .ok_or_else(|| ClientError::InvalidRequest(format!("no playbook entry for '{question}'")))?;
        let correcting = messages[0].content.starts_with("You fix");
        let replies = if correcting { &entry.corrections } else { &entry.initial };
        let mut calls = self.calls.lock().unwrap();
        let n = calls.entry((question.to_string(), correcting)).or_default();
        let reply = if correcting {
            replies.get(*n).or(replies.last())
        } else {
            replies.get(*n % replies.len().max(1))
        };
        *n += 1;
        reply.cloned().ok_or_else(|| ClientError::ScriptExhausted {
            key: format!("{question} ({})", if correcting { "correction" } else { "query" }),
        })
    }
}
