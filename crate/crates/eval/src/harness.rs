//! Per-query pipeline: exclude the query clique, cap the pool, measure
//! distances, select demonstrations, render, complete, parse and score.

use std::sync::atomic::{AtomicUsize, Ordering};

use reasonenv_core::prompt::{builtin_labels, fill, render_with, InstructionPlacement, NO_RELATION};
use reasonenv_core::task::render_events;
use reasonenv_core::selection::{compose_indices, query_rng, sample_indices};
use reasonenv_core::{carb_score, render_tuples, Candidate, Gold, PromptTemplate, SelectionConfig, SelectionMode, Task, TupleScore};
use reasonenv_gateway::{CompletionRequest, GatewayError, ModelClient, TableRow};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::metric::Metric;
use crate::pool::PoolView;
use crate::scoring::{event_counts, micro_f1, score_response, Counts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub task: Task,
    pub n_shots: usize,
    /// Cap on candidates considered per query; `None` uses the whole pool.
    pub pool_size: Option<usize>,
    pub mode: SelectionMode,
    pub ratio: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub metric: Metric,
    /// Count `no_relation` as a class in RE micro-F1.
    pub include_no_relation: bool,
    pub placement: InstructionPlacement,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let sel = SelectionConfig::default();
        EvalConfig {
            task: Task::Oie,
            n_shots: sel.n,
            pool_size: None,
            mode: sel.mode,
            ratio: sel.ratio,
            epsilon: sel.epsilon,
            seed: sel.seed,
            metric: Metric::default(),
            include_no_relation: false,
            placement: InstructionPlacement::System,
            workers: 4,
        }
    }
}

impl EvalConfig {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            n: self.n_shots,
            ratio: self.ratio,
            epsilon: self.epsilon,
            seed: self.seed,
            mode: self.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub clique_id: String,
    pub demo_ids: Vec<String>,
    pub raw_response: String,
    pub prediction: Gold,
    pub gold: Gold,
    pub p: f64,
    /// Mean distance from the query to its demonstrations.
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub task: Task,
    pub n_shots: usize,
    pub pool_size: Option<usize>,
    pub mode: SelectionMode,
    pub seed: u64,
    pub count: usize,
    /// Records carrying an error flag.
    pub flagged: usize,
    pub precision: f64,
    pub recall: f64,
    /// Micro-F1 for RE.
    pub f1: f64,
    pub mean_demo_distance: Option<f64>,
}

/// Headline scores of a set of records. Records are reduced in `query_id`
/// order so the result never depends on completion order.
pub fn aggregate(task: Task, records: &[RunRecord], include_no_relation: bool) -> TupleScore {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    if sorted.is_empty() {
        return TupleScore::ZERO;
    }
    match task {
        Task::Re => {
            let pairs = sorted
                .iter()
                .map(|r| (r.gold.label().unwrap_or(NO_RELATION), r.prediction.label().unwrap_or(NO_RELATION)));
            micro_f1(pairs, NO_RELATION, include_no_relation).1
        }
        Task::Ee => {
            let mut c = Counts::default();
            for r in &sorted {
                c.add(event_counts(r.prediction.events().unwrap_or(&[]), r.gold.events().unwrap_or(&[])));
            }
            c.score()
        }
        _ => {
            let (mut p, mut r) = (0.0, 0.0);
            for rec in &sorted {
                let s = carb_score(rec.prediction.tuples().unwrap_or(&[]), rec.gold.tuples().unwrap_or(&[]));
                p += s.precision;
                r += s.recall;
            }
            let n = sorted.len() as f64;
            TupleScore::new(p / n, r / n)
        }
    }
}

pub fn summarize(cfg: &EvalConfig, records: &[RunRecord]) -> EvalSummary {
    let score = aggregate(cfg.task, records, cfg.include_no_relation);
    let mut ds: Vec<(&str, f64)> = records
        .iter()
        .filter_map(|r| r.d.map(|d| (r.query_id.as_str(), d)))
        .collect();
    ds.sort_by(|a, b| a.0.cmp(b.0));
    EvalSummary {
        task: cfg.task,
        n_shots: cfg.n_shots,
        pool_size: cfg.pool_size,
        mode: cfg.mode,
        seed: cfg.seed,
        count: records.len(),
        flagged: records.iter().filter(|r| r.error.is_some()).count(),
        precision: score.precision,
        recall: score.recall,
        f1: score.f1,
        mean_demo_distance: (!ds.is_empty()).then(|| ds.iter().map(|x| x.1).sum::<f64>() / ds.len() as f64),
    }
}

/// Runs `f` over `items` on up to `workers` threads; output keeps input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, items.len().max(1));
    let mut parts: Vec<Vec<(usize, R)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break out;
                        }
                        out.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut all: Vec<(usize, R)> = parts.drain(..).flatten().collect();
    all.sort_by_key(|(i, _)| *i);
    all.into_iter().map(|(_, r)| r).collect()
}

/// Demonstrations for one query, as indices into the master pool, with
/// their distances to the query. `distance` takes a master pool index.
pub fn choose_demos(
    query: &Candidate,
    view: &PoolView<'_>,
    cfg: &EvalConfig,
    distance: impl Fn(usize) -> Result<f64, EvalError>,
) -> Result<Vec<(usize, f64)>, EvalError> {
    if cfg.n_shots == 0 {
        return Ok(Vec::new());
    }
    let eligible = view.eligible(&query.clique_id, cfg.pool_size);
    let ds = eligible
        .iter()
        .map(|&i| distance(i))
        .collect::<Result<Vec<f64>, _>>()?;
    let sel = cfg.selection();
    let mut rng = query_rng(sel.seed, &query.id);
    let picked = match sel.mode {
        SelectionMode::Sampled => sample_indices(&ds, &sel, &mut rng)?,
        SelectionMode::Composed => {
            let ids: Vec<&str> = eligible.iter().map(|&i| view.get(i).id.as_str()).collect();
            compose_indices(&ds, &ids, &sel, &mut rng)?
        }
    };
    Ok(picked.into_iter().map(|k| (eligible[k], ds[k])).collect())
}

/// Everything a run needs besides the data.
pub struct Harness<'a> {
    pub client: &'a ModelClient,
    pub template: PromptTemplate,
    pub labels: Vec<String>,
    pub cfg: EvalConfig,
}

impl<'a> Harness<'a> {
    /// Uses the built-in template and label set of the task.
    pub fn new(client: &'a ModelClient, cfg: EvalConfig) -> Self {
        Harness {
            client,
            template: PromptTemplate::builtin(cfg.task),
            labels: builtin_labels(cfg.task).unwrap_or_default(),
            cfg,
        }
    }

    fn label_set(&self) -> Option<&[String]> {
        (!self.labels.is_empty()).then_some(self.labels.as_slice())
    }

    fn run_one(&self, query: &Candidate, view: &PoolView<'_>) -> Result<RunRecord, EvalError> {
        let mut record = RunRecord {
            query_id: query.id.clone(),
            clique_id: query.clique_id.clone(),
            demo_ids: Vec::new(),
            raw_response: String::new(),
            prediction: empty_prediction(self.cfg.task),
            gold: query.gold.clone(),
            p: 0.0,
            d: None,
            error: None,
        };
        let demos = match choose_demos(query, view, &self.cfg, |i| self.cfg.metric.distance(query, view.get(i))) {
            Ok(d) => d,
            Err(EvalError::Selection(e)) => {
                record.error = Some(e.to_string());
                return Ok(record);
            }
            Err(e) => return Err(e),
        };
        record.demo_ids = demos.iter().map(|&(i, _)| view.get(i).id.clone()).collect();
        if !demos.is_empty() {
            record.d = Some(demos.iter().map(|x| x.1).sum::<f64>() / demos.len() as f64);
        }
        let demo_refs: Vec<&Candidate> = demos.iter().map(|&(i, _)| view.get(i)).collect();
        let messages = match render_with(&self.template, &demo_refs, &query.sentence, self.label_set(), self.cfg.placement) {
            Ok(m) => m,
            Err(e) => {
                record.error = Some(e.to_string());
                return Ok(record);
            }
        };
        let req = CompletionRequest::for_task(self.cfg.task, self.client.model(), messages);
        match self.client.complete(&req) {
            Ok(text) => record.raw_response = text,
            Err(e @ GatewayError::MalformedResponse(_)) => {
                record.error = Some(e.to_string());
                return Ok(record);
            }
            Err(e) => return Err(e.into()),
        }
        let scored = score_response(self.cfg.task, &query.gold, &record.raw_response, &self.labels);
        record.prediction = scored.prediction;
        record.p = scored.p;
        record.error = scored.flag;
        Ok(record)
    }

    /// Evaluates every query against the pool. Endpoint failures abort the
    /// run; problems with single samples are recorded and flagged.
    pub fn evaluate(&self, queries: &[Candidate], pool: &[Candidate]) -> Result<(EvalSummary, Vec<RunRecord>), EvalError> {
        if self.cfg.n_shots > 0 {
            self.cfg.selection().validate()?;
            self.cfg.metric.check(queries.iter().chain(pool))?;
        }
        let view = PoolView::new(pool, self.cfg.seed);
        let results = parallel_map(queries, self.cfg.workers, |q| self.run_one(q, &view));
        let mut records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        records.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        Ok((summarize(&self.cfg, &records), records))
    }

    /// A mock answer table that returns each query's gold answer, keyed the
    /// way the mock model looks prompts up.
    pub fn oracle_table(&self, queries: &[Candidate]) -> Vec<TableRow> {
        let labels = self.label_set().map(reasonenv_core::prompt::format_label_list).unwrap_or_default();
        let mut rows = Vec::new();
        for q in queries {
            let Some(answer) = gold_answer(self.cfg.task, &q.gold) else { continue };
            let turn = fill(&self.template.query_format, &[("sentence", &q.sentence), ("labels", &labels)]);
            let instruction = fill(&self.template.instruction, &[("labels", &labels)]);
            rows.push(TableRow {
                prompt: format!("{instruction}\n\n{turn}"),
                response: answer.clone(),
            });
            rows.push(TableRow { prompt: turn, response: answer });
        }
        rows
    }
}

/// The gold answer written the way a perfect model would answer.
pub fn gold_answer(task: Task, gold: &Gold) -> Option<String> {
    match task {
        Task::Oie => gold.tuples().map(render_tuples),
        Task::Re => gold.label().map(str::to_string),
        Task::Ee => gold.events().map(render_events),
        _ => gold.label().map(str::to_string),
    }
}

fn empty_prediction(task: Task) -> Gold {
    match task {
        Task::Re => Gold::Label(NO_RELATION.to_string()),
        Task::Ee => Gold::Events(Vec::new()),
        _ => Gold::Tuples(Vec::new()),
    }
}
