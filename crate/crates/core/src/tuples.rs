//! Knowledge tuples and their free-text format.
//!
//! Tuples are written predicate first: `(pred, subj, obj, time, place)`.
//! Absent trailing slots are omitted; an absent slot followed by a present
//! one is written empty, e.g. `(born, Finn, , 1990)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TupleError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnowledgeTuple {
    pub predicate: String,
    pub subject: String,
    pub object: Option<String>,
    pub time: Option<String>,
    pub place: Option<String>,
}

pub const SLOT_NAMES: [&str; 5] = ["predicate", "subject", "object", "time", "place"];

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

impl KnowledgeTuple {
    pub fn new(predicate: &str, subject: &str, object: Option<&str>) -> Result<Self, TupleError> {
        Self::from_slots(&[predicate, subject, object.unwrap_or("")])
    }

    /// Builds a tuple from 2 to 5 slot strings. Slots are trimmed; empty
    /// optional slots become `None`.
    pub fn from_slots<S: AsRef<str>>(slots: &[S]) -> Result<Self, TupleError> {
        if !(2..=5).contains(&slots.len()) {
            return Err(TupleError::SlotCount(slots.len()));
        }
        let get = |i: usize| slots.get(i).and_then(|s| non_empty(s.as_ref()));
        Ok(KnowledgeTuple {
            predicate: get(0).ok_or(TupleError::EmptySlot("predicate"))?,
            subject: get(1).ok_or(TupleError::EmptySlot("subject"))?,
            object: get(2),
            time: get(3),
            place: get(4),
        })
    }

    /// All five slots in their fixed order.
    pub fn slots(&self) -> [Option<&str>; 5] {
        [
            Some(self.predicate.as_str()),
            Some(self.subject.as_str()),
            self.object.as_deref(),
            self.time.as_deref(),
            self.place.as_deref(),
        ]
    }

    /// Slots up to the last present one, absent ones as "".
    fn written_slots(&self) -> Vec<&str> {
        let slots = self.slots();
        let last = slots.iter().rposition(Option::is_some).unwrap_or(1);
        slots[..=last].iter().map(|s| s.unwrap_or("")).collect()
    }

    pub fn render(&self) -> String {
        format!("({})", self.written_slots().join(", "))
    }
}

impl Serialize for KnowledgeTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let slots = self.slots();
        let last = slots.iter().rposition(Option::is_some).unwrap_or(1);
        slots[..=last].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KnowledgeTuple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let slots: Vec<Option<String>> = Vec::deserialize(deserializer)?;
        let slots: Vec<String> = slots.into_iter().map(Option::unwrap_or_default).collect();
        KnowledgeTuple::from_slots(&slots).map_err(D::Error::custom)
    }
}

/// Extracts every parenthesized group from a model response. Nested
/// parentheses stay inside their slot; groups with fewer than two usable
/// slots are dropped, slots past the fifth are ignored.
pub fn parse_tuples(text: &str) -> Vec<KnowledgeTuple> {
    parenthesized_groups(text)
        .into_iter()
        .filter_map(|fields| {
            let fields = &fields[..fields.len().min(5)];
            KnowledgeTuple::from_slots(fields).ok()
        })
        .collect()
}

/// Splits `text` into top-level `( ... )` groups, each split on depth-1
/// commas. Text outside groups and unterminated groups are skipped.
pub(crate) fn parenthesized_groups(text: &str) -> Vec<Vec<String>> {
    let mut groups = Vec::new();
    let mut depth = 0usize;
    let mut fields: Vec<String> = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' => {
                if depth > 0 {
                    current.push(c);
                }
                depth += 1;
            }
            ')' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    fields.push(std::mem::take(&mut current));
                    groups.push(std::mem::take(&mut fields));
                } else {
                    current.push(c);
                }
            }
            ',' if depth == 1 => fields.push(std::mem::take(&mut current)),
            _ if depth > 0 => current.push(c),
            _ => {}
        }
    }
    groups
}

/// Renders tuples on one line separated by "; ".
pub fn render_tuples(tuples: &[KnowledgeTuple]) -> String {
    tuples
        .iter()
        .map(KnowledgeTuple::render)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Lowercases, strips ASCII punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_tuple() {
        let text = "(said, the company, About 60 % of the work force will continue with Gillette or transfer to Twins Pharmaceuticals)";
        let tuples = parse_tuples(text);
        assert_eq!(tuples.len(), 1);
        assert_eq!(tuples[0].predicate, "said");
        assert_eq!(tuples[0].subject, "the company");
        assert!(tuples[0].object.as_deref().unwrap().starts_with("About 60 %"));
    }

    #[test]
    fn prose_without_groups() {
        assert!(parse_tuples("no extractions found.").is_empty());
        assert!(parse_tuples("").is_empty());
    }

    #[test]
    fn semicolon_separated() {
        let tuples = parse_tuples("(a, b); (c, d, e)");
        assert_eq!(tuples.len(), 2);
        assert_eq!(tuples[0].object, None);
        assert_eq!(tuples[1].object.as_deref(), Some("e"));
    }

    #[test]
    fn tolerant_parsing() {
        let text = "Here are the tuples:\n(went, he, to school (daily))\n(lonely)\n(, x, y)\n(a, b, c, d, e, f)\n(unclosed, x";
        let tuples = parse_tuples(text);
        assert_eq!(tuples.len(), 2);
        assert_eq!(tuples[0].object.as_deref(), Some("to school (daily)"));
        assert_eq!(tuples[1].place.as_deref(), Some("e"));
    }

    #[test]
    fn render_formats() {
        let t = KnowledgeTuple::new("said", "the company", Some("X")).unwrap();
        assert_eq!(render_tuples(&[t]), "(said, the company, X)");
        assert_eq!(render_tuples(&[]), "");
        let gap = KnowledgeTuple::from_slots(&["born", "Finn", "", "1990"]).unwrap();
        assert_eq!(gap.render(), "(born, Finn, , 1990)");
        assert_eq!(parse_tuples(&gap.render()), vec![gap]);
    }

    #[test]
    fn slot_validation() {
        assert_eq!(
            KnowledgeTuple::from_slots(&["  ", "x"]),
            Err(TupleError::EmptySlot("predicate"))
        );
        assert_eq!(KnowledgeTuple::from_slots(&["x"]), Err(TupleError::SlotCount(1)));
    }

    #[test]
    fn json_shape() {
        let t = KnowledgeTuple::from_slots(&["born", "Finn", "", "1990"]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"["born","Finn",null,"1990"]"#);
        let back: KnowledgeTuple = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let short: KnowledgeTuple = serde_json::from_str(r#"["said","he"]"#).unwrap();
        assert_eq!(short.object, None);
        assert!(serde_json::from_str::<KnowledgeTuple>(r#"["said"]"#).is_err());
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("The fitness-craze, itself!"), vec!["the", "fitnesscraze", "itself"]);
        assert_eq!(tokenize(" 60 % "), vec!["60"]);
    }
}
