//! Task identifiers and task-specific gold answers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;
use crate::tuples::{parenthesized_groups, KnowledgeTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Paraphrase,
    SentenceMaking,
    Oie,
    Re,
    Ee,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Paraphrase,
        Task::SentenceMaking,
        Task::Oie,
        Task::Re,
        Task::Ee,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Paraphrase => "paraphrase",
            Task::SentenceMaking => "sentence_making",
            Task::Oie => "oie",
            Task::Re => "re",
            Task::Ee => "ee",
        }
    }

    /// Extraction tasks are scored, generation tasks produce text.
    pub fn is_extraction(self) -> bool {
        matches!(self, Task::Oie | Task::Re | Task::Ee)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| PromptError::UnknownTask(s.to_string()))
    }
}

/// A trigger word and the event type it evokes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMention {
    pub trigger: String,
    #[serde(rename = "type")]
    pub event_type: String,
}

impl EventMention {
    pub fn new(trigger: impl Into<String>, event_type: impl Into<String>) -> Self {
        EventMention {
            trigger: trigger.into(),
            event_type: event_type.into(),
        }
    }
}

/// Text written for a sample without any event.
pub const NO_EVENTS: &str = "None";

/// Renders events as `(trigger, Type); (trigger, Type)`.
pub fn render_events(events: &[EventMention]) -> String {
    if events.is_empty() {
        return NO_EVENTS.to_string();
    }
    events
        .iter()
        .map(|e| format!("({}, {})", e.trigger, e.event_type))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reads `(trigger, Type)` pairs from a response; other groups are ignored.
pub fn parse_events(text: &str) -> Vec<EventMention> {
    parenthesized_groups(text)
        .into_iter()
        .filter_map(|g| match g.as_slice() {
            [trigger, ty] if !trigger.trim().is_empty() && !ty.trim().is_empty() => {
                Some(EventMention::new(trigger.trim(), ty.trim()))
            }
            _ => None,
        })
        .collect()
}

/// The answer a demonstration shows, or a sample is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Label(String),
    Tuples(Vec<KnowledgeTuple>),
    Events(Vec<EventMention>),
}

impl Gold {
    pub fn tuples(&self) -> Option<&[KnowledgeTuple]> {
        match self {
            Gold::Tuples(t) => Some(t),
            // An empty JSON array deserializes as the first matching variant.
            Gold::Events(e) if e.is_empty() => Some(&[]),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Gold::Label(l) => Some(l),
            _ => None,
        }
    }

    pub fn events(&self) -> Option<&[EventMention]> {
        match self {
            Gold::Events(e) => Some(e),
            Gold::Tuples(t) if t.is_empty() => Some(&[]),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
        assert_eq!("sentence-making".parse::<Task>().unwrap(), Task::SentenceMaking);
        assert!("ner".parse::<Task>().is_err());
    }

    #[test]
    fn event_format() {
        let ev = vec![
            EventMention::new("fired", "Conflict.Attack"),
            EventMention::new("died", "Life.Die"),
        ];
        let text = render_events(&ev);
        assert_eq!(text, "(fired, Conflict.Attack); (died, Life.Die)");
        assert_eq!(parse_events(&text), ev);
        assert_eq!(render_events(&[]), "None");
        assert!(parse_events("None").is_empty());
        assert!(parse_events("(a, b, c)").is_empty());
    }

    #[test]
    fn gold_json_variants() {
        let g: Gold = serde_json::from_str(r#""per:title""#).unwrap();
        assert_eq!(g.label(), Some("per:title"));
        let g: Gold = serde_json::from_str(r#"[["said","he","hi"]]"#).unwrap();
        assert_eq!(g.tuples().unwrap().len(), 1);
        let g: Gold = serde_json::from_str(r#"[{"trigger":"fired","type":"Conflict.Attack"}]"#).unwrap();
        assert_eq!(g.events().unwrap()[0].event_type, "Conflict.Attack");
        let g: Gold = serde_json::from_str("[]").unwrap();
        assert_eq!(g.tuples(), Some(&[][..]));
        assert_eq!(g.events(), Some(&[][..]));
    }
}
