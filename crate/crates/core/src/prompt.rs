//! Prompt templates and rendering into chat message sequences.
//!
//! Each task has a template file (TOML) with an instruction and formats for
//! demonstration turns and the query turn. Placeholders are written
//! `{name}`: `sentence`, `answer`, `labels`, `head`, `tail`. Built-in
//! templates live under `assets/templates/` and can be overridden from a
//! directory holding files with the same names.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;
use crate::selection::Candidate;
use crate::task::{render_events, Task};
use crate::tuples::render_tuples;

const BUILTIN_TEMPLATES: [(Task, &str); 5] = [
    (Task::Paraphrase, include_str!("../assets/templates/paraphrase.toml")),
    (Task::SentenceMaking, include_str!("../assets/templates/sentence_making.toml")),
    (Task::Oie, include_str!("../assets/templates/oie.toml")),
    (Task::Re, include_str!("../assets/templates/re.toml")),
    (Task::Ee, include_str!("../assets/templates/ee.toml")),
];

const TACRED_LABELS: &str = include_str!("../assets/labels/tacred.txt");
const ACE05_LABELS: &str = include_str!("../assets/labels/ace05.txt");

/// The relation label used when no relation holds.
pub const NO_RELATION: &str = "no_relation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

pub type MessageSequence = Vec<Message>;

/// The last user turn of a sequence.
pub fn last_user_turn(messages: &[Message]) -> Option<&str> {
    messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
}

/// Hand-written demonstration stored in a template file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FixedDemonstration {
    #[serde(default)]
    pub sentence: String,
    #[serde(default)]
    pub head: String,
    #[serde(default)]
    pub tail: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub task: Task,
    pub instruction: String,
    #[serde(rename = "demo_user")]
    pub demo_user_format: String,
    #[serde(rename = "demo_assistant")]
    pub demo_assistant_format: String,
    #[serde(rename = "query")]
    pub query_format: String,
    #[serde(default)]
    pub demonstrations: Vec<FixedDemonstration>,
}

impl PromptTemplate {
    pub fn builtin(task: Task) -> Self {
        let (_, text) = BUILTIN_TEMPLATES
            .iter()
            .find(|(t, _)| *t == task)
            .expect("every task has a built-in template");
        Self::from_toml(text).expect("built-in templates are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let t: PromptTemplate = toml::from_str(text).map_err(|e| e.to_string())?;
        t.validate().map_err(|e| e.to_string())?;
        Ok(t)
    }

    /// Loads `<dir>/<task>.toml` when present, the built-in template otherwise.
    pub fn load_or_builtin(dir: Option<&Path>, task: Task) -> Result<Self, String> {
        if let Some(dir) = dir {
            let path = dir.join(format!("{}.toml", task.as_str()));
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let t = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                if t.task != task {
                    return Err(format!("{} declares task `{}`", path.display(), t.task));
                }
                return Ok(t);
            }
        }
        Ok(Self::builtin(task))
    }

    fn validate(&self) -> Result<(), PromptError> {
        let task = self.task.as_str();
        let need = |s: &str, placeholder: &'static str| {
            if s.contains(&format!("{{{placeholder}}}")) {
                Ok(())
            } else {
                Err(PromptError::MissingPlaceholder { task, placeholder })
            }
        };
        if self.task == Task::SentenceMaking {
            need(&self.query_format, "head")?;
            need(&self.query_format, "tail")?;
        } else {
            need(&self.query_format, "sentence")?;
            need(&self.demo_user_format, "sentence")?;
        }
        need(&self.demo_assistant_format, "answer")?;
        if matches!(self.task, Task::Re | Task::Ee) {
            need(&self.instruction, "labels")?;
        }
        Ok(())
    }
}

/// Built-in label set for RE (42 relations) and EE (33 event types).
pub fn builtin_labels(task: Task) -> Option<Vec<String>> {
    let text = match task {
        Task::Re | Task::SentenceMaking => TACRED_LABELS,
        Task::Ee => ACE05_LABELS,
        _ => return None,
    };
    Some(parse_label_lines(text))
}

/// One label per line; blank lines and `#` comments are skipped.
pub fn parse_label_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn format_label_list(labels: &[String]) -> String {
    format!("[{}]", labels.join(", "))
}

/// Substitutes `{name}` placeholders in one pass; unknown names are kept.
pub fn fill(format: &str, values: &[(&str, &str)]) -> String {
    let map: HashMap<&str, &str> = values.iter().copied().collect();
    let mut out = String::with_capacity(format.len());
    let mut rest = format;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if map.contains_key(&after[..close]) => {
                out.push_str(map[&after[..close]]);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Checks for two well-ordered `<entity> ... </entity>` spans.
pub fn check_entity_markers(text: &str) -> Result<(), PromptError> {
    const OPEN: &str = "<entity>";
    const CLOSE: &str = "</entity>";
    let mut rest = text;
    for _ in 0..2 {
        let o = rest.find(OPEN).ok_or(PromptError::MalformedEntityMarkers)?;
        let after = &rest[o + OPEN.len()..];
        let c = after.find(CLOSE).ok_or(PromptError::MalformedEntityMarkers)?;
        if after[..c].contains(OPEN) {
            return Err(PromptError::MalformedEntityMarkers);
        }
        rest = &after[c + CLOSE.len()..];
    }
    if rest.contains(OPEN) || rest.contains(CLOSE) {
        return Err(PromptError::MalformedEntityMarkers);
    }
    Ok(())
}

/// Where the instruction goes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionPlacement {
    #[default]
    System,
    /// Prepended to the first user turn.
    FirstUser,
}

/// Input text and answer text of one demonstration turn pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoTurn {
    pub user: String,
    pub assistant: String,
}

/// The answer a candidate demonstrates, rendered from its gold structure.
pub fn demo_answer(task: Task, demo: &Candidate) -> Result<String, PromptError> {
    let unusable = || PromptError::UnusableGold {
        id: demo.id.clone(),
        task: task.as_str(),
    };
    match task {
        Task::Oie => demo.gold.tuples().map(render_tuples).ok_or_else(unusable),
        Task::Re => demo
            .gold
            .label()
            .or(demo.label.as_deref())
            .map(str::to_string)
            .ok_or_else(unusable),
        Task::Ee => demo.gold.events().map(render_events).ok_or_else(unusable),
        Task::Paraphrase => demo.gold.label().map(str::to_string).ok_or_else(unusable),
        Task::SentenceMaking => Err(unusable()),
    }
}

fn assemble(
    instruction: String,
    demos: Vec<DemoTurn>,
    query: String,
    placement: InstructionPlacement,
) -> MessageSequence {
    let mut messages = Vec::with_capacity(2 + 2 * demos.len());
    let mut pending = match placement {
        InstructionPlacement::System => {
            messages.push(Message::new(Role::System, instruction));
            None
        }
        InstructionPlacement::FirstUser => Some(instruction),
    };
    let mut user = |text: String| match pending.take() {
        Some(inst) => Message::new(Role::User, format!("{inst}\n\n{text}")),
        None => Message::new(Role::User, text),
    };
    for d in demos {
        messages.push(user(d.user));
        messages.push(Message::new(Role::Assistant, d.assistant));
    }
    messages.push(user(query));
    messages
}

fn labels_for<'a>(template: &PromptTemplate, label_set: Option<&'a [String]>) -> Result<Option<&'a [String]>, PromptError> {
    match template.task {
        Task::Re | Task::Ee => label_set
            .map(Some)
            .ok_or(PromptError::MissingLabelSet(template.task.as_str())),
        _ => Ok(label_set),
    }
}

/// Renders instruction, one user/assistant pair per demonstration and the
/// query as the final user turn.
pub fn render(
    template: &PromptTemplate,
    demos: &[&Candidate],
    query: &str,
    label_set: Option<&[String]>,
) -> Result<MessageSequence, PromptError> {
    render_with(template, demos, query, label_set, InstructionPlacement::System)
}

pub fn render_with(
    template: &PromptTemplate,
    demos: &[&Candidate],
    query: &str,
    label_set: Option<&[String]>,
    placement: InstructionPlacement,
) -> Result<MessageSequence, PromptError> {
    let labels = labels_for(template, label_set)?.map(format_label_list).unwrap_or_default();
    if template.task == Task::Re {
        check_entity_markers(query)?;
    }
    let turns = demos
        .iter()
        .map(|d| {
            let answer = demo_answer(template.task, d)?;
            Ok(DemoTurn {
                user: fill(&template.demo_user_format, &[("sentence", &d.sentence), ("labels", &labels)]),
                assistant: fill(&template.demo_assistant_format, &[("answer", &answer)]),
            })
        })
        .collect::<Result<Vec<_>, PromptError>>()?;
    Ok(assemble(
        fill(&template.instruction, &[("labels", &labels)]),
        turns,
        fill(&template.query_format, &[("sentence", query), ("labels", &labels)]),
        placement,
    ))
}

/// Sentence-making prompt for a head/tail entity pair, preceded by the
/// template's fixed demonstrations.
pub fn render_sentence_making(
    template: &PromptTemplate,
    head: &str,
    tail: &str,
    relations: &[String],
    placement: InstructionPlacement,
) -> MessageSequence {
    let labels = format_label_list(relations);
    let turns = template
        .demonstrations
        .iter()
        .map(|d| DemoTurn {
            user: fill(
                &template.demo_user_format,
                &[("head", &d.head), ("tail", &d.tail), ("labels", &labels), ("sentence", &d.sentence)],
            ),
            assistant: fill(&template.demo_assistant_format, &[("answer", &d.answer)]),
        })
        .collect();
    assemble(
        fill(&template.instruction, &[("labels", &labels)]),
        turns,
        fill(&template.query_format, &[("head", head), ("tail", tail), ("labels", &labels)]),
        placement,
    )
}
