//! Text generation on top of the client: paraphrase cliques and
//! entity-pair sentences.

use reasonenv_core::discrepancy::Clique;
use reasonenv_core::prompt::{render_sentence_making, InstructionPlacement};
use reasonenv_core::{render, PromptTemplate, Task};

use crate::client::ModelClient;
use crate::error::GatewayError;
use crate::request::CompletionRequest;

/// Strips one pair of enclosing quotes that models often echo back.
fn unquote(text: &str) -> &str {
    let t = text.trim();
    for (open, close) in [('"', '"'), ('\u{201c}', '\u{201d}')] {
        if let Some(inner) = t.strip_prefix(open).and_then(|s| s.strip_suffix(close)) {
            return inner.trim();
        }
    }
    t
}

fn paraphrase(client: &ModelClient, template: &PromptTemplate, sentence: &str, sample: u32) -> Result<String, GatewayError> {
    let messages = render(template, &[], sentence, None)?;
    let req = CompletionRequest::for_task(Task::Paraphrase, client.model(), messages).with_sample(sample);
    Ok(unquote(&client.complete(&req)?).to_string())
}

/// Target clique: member `j` is the model's paraphrase of `source[j]`.
/// Gold and trees are not carried over.
pub fn paraphrase_clique(client: &ModelClient, template: &PromptTemplate, source: &Clique) -> Result<Clique, GatewayError> {
    let sentences = source
        .sentences
        .iter()
        .map(|s| paraphrase(client, template, s, 0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Clique {
        id: source.id.clone(),
        sentences,
        gold: None,
        trees: None,
    })
}

/// Builds a source clique from one sentence plus `variants` sampled
/// paraphrases of it.
pub fn expand_clique(
    client: &ModelClient,
    template: &PromptTemplate,
    id: &str,
    sentence: &str,
    variants: usize,
) -> Result<Clique, GatewayError> {
    let mut sentences = vec![sentence.to_string()];
    for k in 0..variants {
        sentences.push(paraphrase(client, template, sentence, k as u32 + 1)?);
    }
    Ok(Clique {
        id: id.to_string(),
        sentences,
        gold: None,
        trees: None,
    })
}

/// Asks for sentences relating `head` and `tail`; keeps at most `count`
/// response lines that mention both entities.
pub fn make_sentences(
    client: &ModelClient,
    template: &PromptTemplate,
    head: &str,
    tail: &str,
    relations: &[String],
    count: usize,
) -> Result<Vec<String>, GatewayError> {
    if head.trim().is_empty() || tail.trim().is_empty() {
        return Err(GatewayError::Config("entities must be nonempty".into()));
    }
    let messages = render_sentence_making(template, head, tail, relations, InstructionPlacement::System);
    let req = CompletionRequest::for_task(Task::SentenceMaking, client.model(), messages);
    let text = client.complete(&req)?;
    Ok(text
        .lines()
        .map(|l| strip_enumeration(l.trim()))
        .filter(|l| !l.is_empty() && l.contains(head) && l.contains(tail))
        .take(count)
        .map(str::to_string)
        .collect())
}

/// Removes a leading "1." / "2)" / "-" list marker.
fn strip_enumeration(line: &str) -> &str {
    let rest = line.trim_start_matches(|c: char| c.is_ascii_digit());
    if rest.len() < line.len() {
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return r.trim_start();
        }
        return line;
    }
    line.strip_prefix("- ").unwrap_or(line)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_markers() {
        assert_eq!(strip_enumeration("1. Finn went."), "Finn went.");
        assert_eq!(strip_enumeration("12) Finn went."), "Finn went.");
        assert_eq!(strip_enumeration("- Finn went."), "Finn went.");
        assert_eq!(strip_enumeration("2001 was the year."), "2001 was the year.");
    }

    #[test]
    fn quotes() {
        assert_eq!(unquote("\"a b\""), "a b");
        assert_eq!(unquote("\u{201c}a b\u{201d}"), "a b");
        assert_eq!(unquote("a \"b\""), "a \"b\"");
    }
}
