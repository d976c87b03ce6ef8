//! The subcommands. Each writes its artifacts under `cfg.out` through a
//! temporary file and prints a short human-readable summary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use reasonenv_core::prompt::builtin_labels;
use reasonenv_core::{bin_and_aggregate, pearson, spearman, Bin, Candidate, PromptTemplate, SelectionMode};
use reasonenv_eval::estimate::fill_extractions;
use reasonenv_eval::{
    load_candidates, load_cliques, score_response, select_capped, subsample, summarize, write_atomic, EvalSummary,
    Estimator, Harness, MetricKind, PoolView, RunRecord, SweepPoint, TreeSource,
};
use reasonenv_gateway::{MockModel, ModelClient, ResponseCache};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};

const ORACLE_ENDPOINT: &str = "mock:oracle";

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

/// JSONL whose first line is `{"config": ...}`.
fn write_jsonl(path: &Path, cfg: &RunConfig, rows: &[impl Serialize]) -> anyhow::Result<()> {
    let mut text = serde_json::to_string(&serde_json::json!({ "config": cfg }))?;
    text.push('\n');
    text.push_str(&reasonenv_eval::to_jsonl(rows));
    Ok(write_atomic(path, text.as_bytes())?)
}

/// CSV preceded by a `# config=<json>` comment line.
fn write_csv(path: &Path, cfg: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let mut buf = format!("# config={}\n", serde_json::to_string(cfg)?).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(write_atomic(path, &buf)?)
}

fn open_cache(cfg: &RunConfig) -> anyhow::Result<ResponseCache> {
    Ok(match &cfg.cache {
        Some(path) => ResponseCache::open(path)?,
        None => ResponseCache::in_memory(),
    })
}

fn client(cfg: &RunConfig) -> anyhow::Result<ModelClient> {
    if cfg.endpoint == ORACLE_ENDPOINT {
        return Err(ConfigError(format!("`{ORACLE_ENDPOINT}` needs a dataset and only works with `run`")).into());
    }
    Ok(ModelClient::from_config(&cfg.gateway(), open_cache(cfg)?)?)
}

fn tree_source(cfg: &RunConfig) -> anyhow::Result<Option<TreeSource>> {
    Ok(match (&cfg.trees, &cfg.parser) {
        (Some(path), _) => Some(TreeSource::load_lookup(path)?),
        (None, Some(cmd)) => Some(TreeSource::command(cmd.clone())),
        (None, None) => None,
    })
}

fn plain(sentence: &str) -> String {
    sentence.replace("<entity>", "").replace("</entity>", "")
}

/// Gives every item the input its metric needs: parse trees from the tree
/// source, or extracted tuples from the model.
fn prepare(cfg: &RunConfig, items: &mut [Candidate], client: Option<&ModelClient>) -> anyhow::Result<()> {
    if cfg.n_shots == 0 {
        return Ok(());
    }
    match cfg.metric {
        MetricKind::Hws => {
            let missing: Vec<usize> = (0..items.len()).filter(|&i| items[i].tree.is_none()).collect();
            if missing.is_empty() {
                return Ok(());
            }
            let Some(source) = tree_source(cfg)? else { return Ok(()) };
            let sentences: Vec<String> = missing.iter().map(|&i| plain(&items[i].sentence)).collect();
            for (i, tree) in missing.into_iter().zip(source.parse(&sentences)?) {
                items[i].tree = Some(tree);
            }
        }
        MetricKind::Content => {
            if items.iter().any(|c| c.extracted.is_none()) {
                let owned;
                let client = match client {
                    Some(c) => c,
                    None => {
                        owned = self::client(cfg)?;
                        &owned
                    }
                };
                fill_extractions(client, items, cfg.workers)?;
            }
        }
    }
    Ok(())
}

/// Queries (optionally a seeded subset) and the candidate pool.
fn load_inputs(cfg: &RunConfig) -> anyhow::Result<(Vec<Candidate>, Vec<Candidate>)> {
    let dataset = cfg.require(&cfg.dataset, "dataset")?;
    let mut queries = load_candidates(cfg.task, dataset)?;
    let pool = match &cfg.pool {
        Some(p) => load_candidates(cfg.task, p)?,
        None => queries.clone(),
    };
    if let Some(k) = cfg.sample {
        queries = subsample(&queries, k, cfg.seed);
    }
    Ok((queries, pool))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn print_bins(out: &mut dyn Write, r: Option<f64>, bins: &[Bin]) -> std::io::Result<()> {
    writeln!(out, "pearson r = {}", fmt_opt(r))?;
    for b in bins {
        writeln!(
            out,
            "bin [{:.4}, {:.4}] n={} mean_d={} mean_p={}",
            b.lo,
            b.hi,
            b.count,
            fmt_opt(b.mean_d),
            fmt_opt(b.mean_p)
        )?;
    }
    Ok(())
}

/// Paraphrases every clique, measures the discrepancy and pairs it with
/// the zero-shot score.
pub fn estimate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let path = cfg
        .cliques
        .as_deref()
        .or(cfg.dataset.as_deref())
        .ok_or_else(|| ConfigError("no cliques given (set --cliques)".into()))?;
    let cliques = load_cliques(path)?;
    let client = client(cfg)?;
    let trees = tree_source(cfg)?;
    let estimator = Estimator {
        client: &client,
        trees: trees.as_ref(),
        cfg: cfg.estimate(),
    };
    let (report, estimates) = estimator.run(&cliques)?;

    write_json(
        &out_path(cfg, "estimate.json"),
        &serde_json::json!({ "config": cfg, "report": report, "cliques": estimates }),
    )?;
    let rows = report
        .per_sentence
        .iter()
        .map(|s| vec![s.clique_id.clone(), s.index.to_string(), s.d.to_string(), s.p.map(|p| p.to_string()).unwrap_or_default()])
        .collect();
    write_csv(&out_path(cfg, "estimate.csv"), cfg, &["clique_id", "index", "d", "p"], rows)?;
    writeln!(out, "{} cliques, {} sentences", estimates.len(), report.per_sentence.len())?;
    print_bins(out, report.pearson_r, &report.bins)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionLine {
    pub query_id: String,
    pub pool_size: Option<usize>,
    pub mode: SelectionMode,
    pub seed: u64,
    pub demo_ids: Vec<String>,
    pub distances: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Selects demonstrations for every query at every pool cap, without
/// calling the model (except to extract tuples for the content metric).
pub fn select(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let (mut queries, mut pool) = load_inputs(cfg)?;
    prepare(cfg, &mut queries, None)?;
    prepare(cfg, &mut pool, None)?;
    let metric = cfg.metric();
    cfg.eval(None).selection().validate()?;
    metric.check(queries.iter().chain(&pool))?;

    let view = PoolView::new(&pool, cfg.seed);
    let mut lines = Vec::new();
    let mut points = Vec::new();
    for cap in cfg.pool_caps() {
        let ecfg = cfg.eval(cap);
        let selections = select_capped(&queries, &view, cap, &ecfg, |q, c| metric.distance(&queries[q], &pool[c]))?;
        points.push(SweepPoint::from_selections(cap.unwrap_or(pool.len()), &selections));
        for (q, sel) in queries.iter().zip(&selections) {
            let (demo_ids, distances, error) = match sel {
                Ok(demos) => (
                    demos.iter().map(|&(i, _)| pool[i].id.clone()).collect(),
                    demos.iter().map(|&(_, d)| d).collect(),
                    None,
                ),
                Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
            };
            lines.push(SelectionLine {
                query_id: q.id.clone(),
                pool_size: cap,
                mode: cfg.mode,
                seed: cfg.seed,
                demo_ids,
                distances,
                error,
            });
        }
    }

    write_jsonl(&out_path(cfg, "selections.jsonl"), cfg, &lines)?;
    let rows = points
        .iter()
        .map(|p| vec![p.pool_size.to_string(), p.mean_distance.to_string(), p.queries.to_string(), p.skipped.to_string()])
        .collect();
    write_csv(&out_path(cfg, "sweep.csv"), cfg, &["pool_size", "mean_distance", "queries", "skipped"], rows)?;
    for p in &points {
        writeln!(
            out,
            "pool_size={} mean_distance={:.4} queries={} skipped={}",
            p.pool_size, p.mean_distance, p.queries, p.skipped
        )?;
    }
    if points.len() > 1 {
        let xs: Vec<f64> = points.iter().map(|p| p.pool_size as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.mean_distance).collect();
        writeln!(out, "spearman(pool_size, mean_distance) = {}", fmt_opt(spearman(&xs, &ys).ok()))?;
    }
    Ok(())
}

/// A stored run record, tagged with the pool cap it ran under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub pool_size: Option<usize>,
    #[serde(flatten)]
    pub record: RunRecord,
}

fn headline(out: &mut dyn Write, s: &EvalSummary) -> std::io::Result<()> {
    let cap = s.pool_size.map(|c| c.to_string()).unwrap_or_else(|| "all".into());
    let metric = if s.task == reasonenv_core::Task::Re { "micro_f1" } else { "f1" };
    writeln!(
        out,
        "{} n={} pool_size={} count={} flagged={} precision={:.4} recall={:.4} {}={:.4} mean_demo_distance={}",
        s.task,
        s.n_shots,
        cap,
        s.count,
        s.flagged,
        s.precision,
        s.recall,
        metric,
        s.f1,
        fmt_opt(s.mean_demo_distance)
    )
}

fn template(cfg: &RunConfig) -> anyhow::Result<PromptTemplate> {
    PromptTemplate::load_or_builtin(cfg.templates.as_deref(), cfg.task).map_err(|e| ConfigError(e).into())
}

/// Evaluates the task end to end at every pool cap.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let (mut queries, mut pool) = load_inputs(cfg)?;
    let template = template(cfg)?;
    let client = if cfg.endpoint == ORACLE_ENDPOINT {
        let probe = ModelClient::new(Box::new(MockModel::Empty), ResponseCache::in_memory(), &cfg.model, 1);
        let mut harness = Harness::new(&probe, cfg.eval(None));
        harness.template = template.clone();
        let table = harness.oracle_table(&queries);
        ModelClient::new(Box::new(MockModel::table(table)), open_cache(cfg)?, &cfg.model, cfg.max_in_flight)
    } else {
        client(cfg)?
    };
    prepare(cfg, &mut queries, Some(&client))?;
    prepare(cfg, &mut pool, Some(&client))?;

    let mut summaries = Vec::new();
    let mut stored = Vec::new();
    for cap in cfg.pool_caps() {
        let mut harness = Harness::new(&client, cfg.eval(cap));
        harness.template = template.clone();
        let (summary, records) = harness.evaluate(&queries, &pool)?;
        headline(out, &summary)?;
        summaries.push(summary);
        stored.extend(records.into_iter().map(|record| StoredRecord { pool_size: cap, record }));
    }
    write_jsonl(&out_path(cfg, "records.jsonl"), cfg, &stored)?;
    write_json(&out_path(cfg, "summary.json"), &serde_json::json!({ "config": cfg, "summaries": summaries }))?;
    Ok(())
}

fn read_records(path: &Path) -> anyhow::Result<Vec<StoredRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| parse_error(path, i, e))?;
        if v.get("config").is_some() && v.get("query_id").is_none() {
            continue;
        }
        out.push(serde_json::from_value(v).map_err(|e| parse_error(path, i, e))?);
    }
    Ok(out)
}

fn parse_error(path: &Path, i: usize, e: impl ToString) -> reasonenv_eval::EvalError {
    reasonenv_eval::EvalError::Parse {
        path: path.to_path_buf(),
        line: i + 1,
        message: e.to_string(),
    }
}

/// Re-scores stored records from their raw responses, without the model.
pub fn score(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let default = out_path(cfg, "records.jsonl");
    let path = cfg.records.as_deref().unwrap_or(&default);
    let labels = builtin_labels(cfg.task).unwrap_or_default();
    let mut groups: BTreeMap<Option<usize>, Vec<RunRecord>> = BTreeMap::new();
    for StoredRecord { pool_size, mut record } in read_records(path)? {
        // records that never got a usable response keep their flag
        if record.error.is_none() || !record.raw_response.is_empty() {
            let scored = score_response(cfg.task, &record.gold, &record.raw_response, &labels);
            record.prediction = scored.prediction;
            record.p = scored.p;
            record.error = scored.flag;
        }
        groups.entry(pool_size).or_default().push(record);
    }
    let summaries: Vec<EvalSummary> = groups
        .iter()
        .map(|(cap, records)| summarize(&cfg.eval(*cap), records))
        .collect();
    for s in &summaries {
        headline(out, s)?;
    }
    write_json(&out_path(cfg, "score.json"), &serde_json::json!({ "config": cfg, "summaries": summaries }))?;
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    d: f64,
    p: Option<f64>,
}

/// Pearson correlation and binned means over a stored `(d, p)` table.
pub fn correlate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let default = out_path(cfg, "estimate.csv");
    let path = cfg.csv.as_deref().unwrap_or(&default);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| path.display().to_string())?;
    let mut pairs = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.with_context(|| path.display().to_string())?;
        if let Some(p) = row.p {
            pairs.push((row.d, p));
        }
    }
    if pairs.is_empty() {
        return Err(ConfigError(format!("{}: no rows with both d and p", path.display())).into());
    }
    let bins = bin_and_aggregate(&pairs, cfg.bins, cfg.bin_mode)?;
    let (ds, ps): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let r = pearson(&ds, &ps).ok();
    write_json(
        &out_path(cfg, "correlate.json"),
        &serde_json::json!({ "config": cfg, "count": pairs.len(), "pearson_r": r, "bins": bins }),
    )?;
    writeln!(out, "{} pairs", pairs.len())?;
    print_bins(out, r, &bins)?;
    Ok(())
}
