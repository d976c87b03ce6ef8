//! Task datasets and candidate pools as JSONL.
//!
//! Every task record becomes a [`Candidate`]: queries and pool entries have
//! the same shape, so a dataset file can serve as either. A line that
//! already has a `gold` field is read as a candidate directly.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reasonenv_core::discrepancy::Clique;
use reasonenv_core::{Candidate, EventMention, Gold, KnowledgeTuple, ParseTree, Task};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OieRecord {
    pub id: String,
    #[serde(default)]
    pub clique_id: Option<String>,
    pub sentence: String,
    #[serde(default)]
    pub tree: Option<ParseTree>,
    pub tuples: Vec<KnowledgeTuple>,
    #[serde(default)]
    pub extracted: Option<Vec<KnowledgeTuple>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReRecord {
    pub id: String,
    #[serde(default)]
    pub clique_id: Option<String>,
    pub sentence_with_markers: String,
    pub head: String,
    pub tail: String,
    pub label: String,
    #[serde(default)]
    pub tree: Option<ParseTree>,
    #[serde(default)]
    pub extracted: Option<Vec<KnowledgeTuple>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EeRecord {
    pub id: String,
    #[serde(default)]
    pub clique_id: Option<String>,
    pub sentence: String,
    pub events: Vec<EventMention>,
    #[serde(default)]
    pub tree: Option<ParseTree>,
    #[serde(default)]
    pub extracted: Option<Vec<KnowledgeTuple>>,
}

impl From<OieRecord> for Candidate {
    fn from(r: OieRecord) -> Self {
        Candidate {
            clique_id: r.clique_id.unwrap_or_else(|| r.id.clone()),
            id: r.id,
            sentence: r.sentence,
            tree: r.tree,
            gold: Gold::Tuples(r.tuples),
            label: None,
            extracted: r.extracted,
        }
    }
}

impl From<ReRecord> for Candidate {
    fn from(r: ReRecord) -> Self {
        Candidate {
            clique_id: r.clique_id.unwrap_or_else(|| r.id.clone()),
            id: r.id,
            sentence: r.sentence_with_markers,
            tree: r.tree,
            gold: Gold::Label(r.label.clone()),
            label: Some(r.label),
            extracted: r.extracted,
        }
    }
}

impl From<EeRecord> for Candidate {
    fn from(r: EeRecord) -> Self {
        Candidate {
            clique_id: r.clique_id.unwrap_or_else(|| r.id.clone()),
            id: r.id,
            sentence: r.sentence,
            tree: r.tree,
            gold: Gold::Events(r.events),
            label: None,
            extracted: r.extracted,
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl ToString) -> EvalError {
    EvalError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

/// Reads non-blank lines of a JSONL file.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(path, i + 1, e)))
        .collect()
}

/// Serializes items one per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records encode as JSON"));
        out.push('\n');
    }
    out
}

/// Writes through a sibling temporary file and renames it into place, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), EvalError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| EvalError::io(parent, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| EvalError::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| EvalError::io(&tmp, e))?;
    f.sync_all().map_err(|e| EvalError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EvalError::io(path, e))
}

fn candidate_from_value(task: Task, v: serde_json::Value) -> Result<Candidate, serde_json::Error> {
    if v.get("gold").is_some() {
        return serde_json::from_value(v);
    }
    Ok(match task {
        Task::Re => serde_json::from_value::<ReRecord>(v)?.into(),
        Task::Ee => serde_json::from_value::<EeRecord>(v)?.into(),
        _ => serde_json::from_value::<OieRecord>(v)?.into(),
    })
}

/// Loads a task dataset or candidate pool and checks that every gold
/// answer fits the task.
pub fn load_candidates(task: Task, path: &Path) -> Result<Vec<Candidate>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| parse_err(path, i + 1, e))?;
        let c = candidate_from_value(task, v).map_err(|e| parse_err(path, i + 1, e))?;
        let fits = match task {
            Task::Oie => c.gold.tuples().is_some(),
            Task::Re => c.gold.label().is_some(),
            Task::Ee => c.gold.events().is_some(),
            Task::Paraphrase | Task::SentenceMaking => true,
        };
        if !fits {
            return Err(parse_err(path, i + 1, format!("gold answer does not fit task {task}")));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn load_cliques(path: &Path) -> Result<Vec<Clique>, EvalError> {
    let cliques: Vec<Clique> = read_jsonl(path)?;
    for (i, c) in cliques.iter().enumerate() {
        c.validate().map_err(|e| parse_err(path, i + 1, e))?;
    }
    Ok(cliques)
}

/// `k` items chosen uniformly without replacement by `seed`, in their
/// original order. Returns everything when `k` is at least the length.
pub fn subsample<T: Clone>(items: &[T], k: usize, seed: u64) -> Vec<T> {
    if k >= items.len() {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, items.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}
