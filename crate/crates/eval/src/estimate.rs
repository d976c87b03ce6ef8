//! Discrepancy estimation: paraphrase each source clique with the model,
//! measure how far the model's paraphrases sit from the human ones, and
//! pair that with the model's zero-shot score on the original sentence.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use reasonenv_core::discrepancy::Clique;
use reasonenv_core::prompt::{builtin_labels, render_with, InstructionPlacement};
use reasonenv_core::{
    carb_score, estimate_sd, hws_distance, parse_bracketed, parse_tuples, BinMode, Candidate, DiscrepancyAxis,
    DiscrepancyReport, KnowledgeTuple, ParseTree, PromptTemplate, SentenceDiscrepancy, Task,
};
use reasonenv_gateway::{paraphrase_clique, CompletionRequest, ModelClient};
use serde::{Deserialize, Serialize};

use crate::dataset::read_jsonl;
use crate::error::EvalError;
use crate::harness::parallel_map;
use crate::metric::{Metric, MetricKind};
use crate::scoring::score_response;

/// Produces parse trees for sentences.
pub enum TreeSource {
    /// Pre-parsed sentences, keyed by exact sentence text.
    Lookup(HashMap<String, ParseTree>),
    /// Shell command reading one sentence per line on stdin and writing one
    /// bracketed tree per line on stdout.
    Command { command: String, memo: Mutex<HashMap<String, ParseTree>> },
}

#[derive(Deserialize)]
struct TreeLine {
    sentence: String,
    tree: ParseTree,
}

impl TreeSource {
    /// Reads JSONL lines `{sentence, tree}` (other fields ignored).
    pub fn load_lookup(path: &Path) -> Result<Self, EvalError> {
        let lines: Vec<TreeLine> = read_jsonl(path)?;
        Ok(TreeSource::Lookup(lines.into_iter().map(|l| (l.sentence, l.tree)).collect()))
    }

    pub fn command(command: impl Into<String>) -> Self {
        TreeSource::Command {
            command: command.into(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn parse(&self, sentences: &[String]) -> Result<Vec<ParseTree>, EvalError> {
        match self {
            TreeSource::Lookup(map) => sentences
                .iter()
                .map(|s| {
                    map.get(s)
                        .cloned()
                        .ok_or_else(|| EvalError::Parser(format!("no tree for sentence `{s}`")))
                })
                .collect(),
            TreeSource::Command { command, memo } => {
                let missing: Vec<&String> = {
                    let m = memo.lock().expect("memo lock");
                    sentences.iter().filter(|s| !m.contains_key(*s)).collect()
                };
                if !missing.is_empty() {
                    let trees = run_parser(command, &missing)?;
                    let mut m = memo.lock().expect("memo lock");
                    for (s, t) in missing.into_iter().zip(trees) {
                        m.insert(s.clone(), t);
                    }
                }
                let m = memo.lock().expect("memo lock");
                Ok(sentences.iter().map(|s| m[s].clone()).collect())
            }
        }
    }
}

fn run_parser(command: &str, sentences: &[&String]) -> Result<Vec<ParseTree>, EvalError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| EvalError::Parser(format!("cannot start `{command}`: {e}")))?;
    let input: String = sentences.iter().map(|s| format!("{}\n", s.replace('\n', " "))).collect();
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let out = child
        .wait_with_output()
        .map_err(|e| EvalError::Parser(format!("`{command}`: {e}")))?;
    writer
        .join()
        .expect("writer thread")
        .map_err(|e| EvalError::Parser(format!("`{command}`: {e}")))?;
    if !out.status.success() {
        return Err(EvalError::Parser(format!("`{command}` exited with {}", out.status)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let trees = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_bracketed(l).map_err(|e| EvalError::Parser(format!("{e} in `{l}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if trees.len() != sentences.len() {
        return Err(EvalError::Parser(format!(
            "`{command}` returned {} trees for {} sentences",
            trees.len(),
            sentences.len()
        )));
    }
    Ok(trees)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    /// Task whose zero-shot score is paired with the discrepancy.
    pub task: Task,
    pub metric: Metric,
    pub bins: usize,
    pub bin_mode: BinMode,
    pub axis: DiscrepancyAxis,
    pub placement: InstructionPlacement,
    pub workers: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            task: Task::Oie,
            metric: Metric::default(),
            bins: 5,
            bin_mode: BinMode::EqualWidth,
            axis: DiscrepancyAxis::Original,
            placement: InstructionPlacement::System,
            workers: 4,
        }
    }
}

/// Zero-shot tuples for a sentence, used as the content metric's input.
pub fn extract_tuples(client: &ModelClient, sentence: &str) -> Result<Vec<KnowledgeTuple>, EvalError> {
    let template = PromptTemplate::builtin(Task::Oie);
    let messages = render_with(&template, &[], sentence, None, InstructionPlacement::System)?;
    let text = client.complete(&CompletionRequest::for_task(Task::Oie, client.model(), messages))?;
    Ok(parse_tuples(&text))
}

/// Fills in missing `extracted` tuples by asking the model.
pub fn fill_extractions(client: &ModelClient, items: &mut [Candidate], workers: usize) -> Result<(), EvalError> {
    let todo: Vec<(usize, String)> = items
        .iter()
        .enumerate()
        .filter(|(_, c)| c.extracted.is_none())
        .map(|(i, c)| (i, strip_markers(&c.sentence)))
        .collect();
    let results = parallel_map(&todo, workers, |(_, s)| extract_tuples(client, s));
    for ((i, _), r) in todo.iter().zip(results) {
        items[*i].extracted = Some(r?);
    }
    Ok(())
}

fn strip_markers(s: &str) -> String {
    s.replace("<entity>", "").replace("</entity>", "")
}

pub struct Estimator<'a> {
    pub client: &'a ModelClient,
    pub trees: Option<&'a TreeSource>,
    pub cfg: EstimateConfig,
}

/// Per-clique outcome before the report is assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueEstimate {
    pub clique_id: String,
    pub targets: Vec<String>,
    pub d: Vec<f64>,
    pub p: Option<f64>,
}

impl Estimator<'_> {
    fn distances(&self, source: &Clique, target: &Clique) -> Result<Vec<f64>, EvalError> {
        match self.cfg.metric.kind {
            MetricKind::Hws => {
                let src = match &source.trees {
                    Some(t) => t.clone(),
                    None => self.tree_source()?.parse(&source.sentences)?,
                };
                let tgt = self.tree_source()?.parse(&target.sentences)?;
                let hws = self.cfg.metric.hws;
                hws.validate()?;
                Ok(estimate_sd(&src, &tgt, |a, b| hws_distance(a, b, &hws).expect("config validated"))?)
            }
            MetricKind::Content => {
                let extract = |c: &Clique| -> Result<Vec<Vec<KnowledgeTuple>>, EvalError> {
                    c.sentences.iter().map(|s| extract_tuples(self.client, s)).collect()
                };
                let (src, tgt) = (extract(source)?, extract(target)?);
                Ok(estimate_sd(&src, &tgt, |a, b| 1.0 - carb_score(a, b).f1)?)
            }
        }
    }

    fn tree_source(&self) -> Result<&TreeSource, EvalError> {
        self.trees
            .ok_or_else(|| EvalError::Parser("the hws metric needs trees: give a tree file or a parser command".into()))
    }

    fn zero_shot(&self, clique: &Clique) -> Result<Option<f64>, EvalError> {
        let Some(gold) = &clique.gold else { return Ok(None) };
        let template = PromptTemplate::builtin(self.cfg.task);
        let labels = builtin_labels(self.cfg.task).unwrap_or_default();
        let label_set = (!labels.is_empty()).then_some(labels.as_slice());
        let messages = render_with(&template, &[], &clique.sentences[0], label_set, self.cfg.placement)?;
        let text = self
            .client
            .complete(&CompletionRequest::for_task(self.cfg.task, self.client.model(), messages))?;
        Ok(Some(score_response(self.cfg.task, gold, &text, &labels).p))
    }

    pub fn estimate_clique(&self, source: &Clique) -> Result<CliqueEstimate, EvalError> {
        source.validate()?;
        let template = PromptTemplate::builtin(Task::Paraphrase);
        let target = paraphrase_clique(self.client, &template, source)?;
        Ok(CliqueEstimate {
            clique_id: source.id.clone(),
            d: self.distances(source, &target)?,
            p: self.zero_shot(source)?,
            targets: target.sentences,
        })
    }

    /// Estimates every clique and builds the binned report.
    pub fn run(&self, cliques: &[Clique]) -> Result<(DiscrepancyReport, Vec<CliqueEstimate>), EvalError> {
        let mut estimates = parallel_map(cliques, self.cfg.workers, |c| self.estimate_clique(c))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        estimates.sort_by(|a, b| a.clique_id.cmp(&b.clique_id));
        let per_sentence = estimates
            .iter()
            .flat_map(|e| {
                e.d.iter().enumerate().map(|(j, &d)| SentenceDiscrepancy {
                    clique_id: e.clique_id.clone(),
                    index: j,
                    d,
                    p: if j == 0 { e.p } else { None },
                })
            })
            .collect();
        let report = DiscrepancyReport::build(per_sentence, self.cfg.bins, self.cfg.bin_mode, self.cfg.axis)?;
        Ok((report, estimates))
    }
}
