//! Turning a raw response into a prediction and scoring it against gold.

use std::collections::HashMap;

use reasonenv_core::prompt::NO_RELATION;
use reasonenv_core::task::parse_events;
use reasonenv_core::{carb_score, parse_tuples, EventMention, Gold, Task, TupleScore};
use serde::{Deserialize, Serialize};

/// Result of mapping free text onto a closed label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedLabel {
    pub label: String,
    /// False when nothing matched and the fallback was used.
    pub mapped: bool,
}

fn clean(text: &str) -> &str {
    text.trim().trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '`').trim()
}

/// Exact case-insensitive match, else the longest label contained in the
/// text (case-insensitive), else `fallback`.
pub fn map_label(text: &str, labels: &[String], fallback: &str) -> MappedLabel {
    let t = clean(text).to_lowercase();
    if let Some(l) = labels.iter().find(|l| l.to_lowercase() == t) {
        return MappedLabel {
            label: l.clone(),
            mapped: true,
        };
    }
    let hit = labels
        .iter()
        .filter(|l| !l.is_empty() && t.contains(&l.to_lowercase()))
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)));
    match hit {
        Some(l) => MappedLabel {
            label: l.clone(),
            mapped: true,
        },
        None => MappedLabel {
            label: fallback.to_string(),
            mapped: false,
        },
    }
}

/// Counts behind an F1 score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn score(&self) -> TupleScore {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        TupleScore::new(ratio(self.correct, self.predicted), ratio(self.correct, self.gold))
    }
}

/// Trigger matched case-insensitively, type exactly; each gold mention
/// can be claimed once.
pub fn event_counts(pred: &[EventMention], gold: &[EventMention]) -> Counts {
    let mut pool: HashMap<(String, &str), usize> = HashMap::new();
    for g in gold {
        *pool.entry((g.trigger.to_lowercase(), g.event_type.as_str())).or_default() += 1;
    }
    let mut correct = 0;
    for p in pred {
        if let Some(n) = pool.get_mut(&(p.trigger.to_lowercase(), p.event_type.as_str())) {
            if *n > 0 {
                *n -= 1;
                correct += 1;
            }
        }
    }
    Counts {
        correct,
        predicted: pred.len(),
        gold: gold.len(),
    }
}

/// A scored response.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub prediction: Gold,
    /// Per-sample score in `[0, 1]`.
    pub p: f64,
    /// Set when the response could not be read as an answer.
    pub flag: Option<String>,
}

/// Parses `response` for `task` and scores it against `gold`. `labels` is
/// the closed label set for RE and EE.
pub fn score_response(task: Task, gold: &Gold, response: &str, labels: &[String]) -> Scored {
    match task {
        Task::Re => {
            let m = map_label(response, labels, NO_RELATION);
            let correct = gold.label() == Some(m.label.as_str());
            Scored {
                p: if correct { 1.0 } else { 0.0 },
                flag: (!m.mapped).then(|| "unmappable label".to_string()),
                prediction: Gold::Label(m.label),
            }
        }
        Task::Ee => {
            let events: Vec<EventMention> = parse_events(response)
                .into_iter()
                .map(|e| {
                    let m = map_label(&e.event_type, labels, &e.event_type);
                    EventMention::new(e.trigger, m.label)
                })
                .collect();
            let gold_events = gold.events().unwrap_or(&[]);
            let counts = event_counts(&events, gold_events);
            let p = if counts.predicted == 0 && counts.gold == 0 {
                1.0
            } else {
                counts.score().f1
            };
            let unreadable = events.is_empty() && !response.trim().is_empty() && clean(response) != "None";
            Scored {
                prediction: Gold::Events(events),
                p,
                flag: unreadable.then(|| "no event pairs found".to_string()),
            }
        }
        _ => {
            let tuples = parse_tuples(response);
            let gold_tuples = gold.tuples().unwrap_or(&[]);
            let p = carb_score(&tuples, gold_tuples).f1;
            let unreadable = tuples.is_empty() && !response.trim().is_empty();
            Scored {
                prediction: Gold::Tuples(tuples),
                p,
                flag: unreadable.then(|| "no tuples found".to_string()),
            }
        }
    }
}

/// Micro precision/recall/F1 over pooled label decisions. Unless
/// `include_negative`, `negative` is not a class: predicting it is no guess
/// and a gold `negative` is nothing to find.
pub fn micro_f1<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>, negative: &str, include_negative: bool) -> (Counts, TupleScore) {
    let mut c = Counts::default();
    for (gold, pred) in pairs {
        let positive = |l: &str| include_negative || l != negative;
        if positive(pred) {
            c.predicted += 1;
        }
        if positive(gold) {
            c.gold += 1;
        }
        if gold == pred && positive(gold) {
            c.correct += 1;
        }
    }
    (c, c.score())
}

#[cfg(test)]
mod tests {
    use super::*;
    use reasonenv_core::KnowledgeTuple;

    fn labels() -> Vec<String> {
        ["no_relation", "per:title", "per:city_of_birth", "per:cities_of_residence", "org:founded"]
            .map(String::from)
            .to_vec()
    }

    #[test]
    fn label_cascade() {
        let l = labels();
        assert_eq!(map_label("PER:TITLE", &l, NO_RELATION).label, "per:title");
        assert_eq!(map_label("  \"per:title.\" ", &l, NO_RELATION).label, "per:title");
        let m = map_label("The relation is per:city_of_birth here", &l, NO_RELATION);
        assert_eq!((m.label.as_str(), m.mapped), ("per:city_of_birth", true));
        let m = map_label("I cannot tell", &l, NO_RELATION);
        assert_eq!((m.label.as_str(), m.mapped), ("no_relation", false));
    }

    #[test]
    fn longest_label_wins() {
        let l = vec!["per:title".to_string(), "per:title_x".to_string()];
        assert_eq!(map_label("answer: per:title_x", &l, "none").label, "per:title_x");
    }

    #[test]
    fn event_matching_rule() {
        let gold = vec![EventMention::new("attacked", "Attack"), EventMention::new("died", "Die")];
        // right trigger, wrong type: one false positive and one miss
        let pred = vec![EventMention::new("Attacked", "Transport"), EventMention::new("died", "Die")];
        let c = event_counts(&pred, &gold);
        assert_eq!(c, Counts { correct: 1, predicted: 2, gold: 2 });
        // duplicates cannot claim one gold twice
        let dup = vec![EventMention::new("died", "Die"), EventMention::new("died", "Die")];
        assert_eq!(event_counts(&dup, &gold).correct, 1);
    }

    #[test]
    fn per_task_scores() {
        let l = labels();
        let s = score_response(Task::Re, &Gold::Label("per:title".into()), "per:title", &l);
        assert_eq!((s.p, s.flag.is_none()), (1.0, true));
        let s = score_response(Task::Re, &Gold::Label("per:title".into()), "who knows", &l);
        assert_eq!(s.p, 0.0);
        assert!(s.flag.is_some());

        let gold = Gold::Tuples(vec![KnowledgeTuple::new("went", "he", Some("home")).unwrap()]);
        assert_eq!(score_response(Task::Oie, &gold, "(went, he, home)", &[]).p, 1.0);
        assert_eq!(score_response(Task::Oie, &gold, "", &[]).p, 0.0);

        let ace = vec!["Attack".to_string(), "Die".to_string()];
        let g = Gold::Events(vec![EventMention::new("hit", "Attack")]);
        assert_eq!(score_response(Task::Ee, &g, "(hit, attack)", &ace).p, 1.0);
        assert_eq!(score_response(Task::Ee, &Gold::Events(vec![]), "None", &ace).p, 1.0);
        assert!(score_response(Task::Ee, &g, "garbage", &ace).flag.is_some());
    }

    #[test]
    fn micro_f1_conventions() {
        let pairs = [("a", "a"), ("b", "no_relation"), ("no_relation", "a"), ("no_relation", "no_relation")];
        let (c, s) = micro_f1(pairs, "no_relation", false);
        assert_eq!(c, Counts { correct: 1, predicted: 2, gold: 2 });
        assert_eq!(s.f1, 0.5);
        let (c, _) = micro_f1(pairs, "no_relation", true);
        assert_eq!(c, Counts { correct: 2, predicted: 4, gold: 4 });
        let all_negative = [("a", "no_relation"), ("b", "no_relation")];
        assert_eq!(micro_f1(all_negative, "no_relation", false).1.f1, 0.0);
    }
}
