//! End-to-end acceptance checks. Runs as a plain binary so each check
//! prints one PASS/FAIL line; any failure makes the target fail.
//!
//! `cargo test --test acceptance -- 3 7` runs only checks 3 and 7.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use reasonenv_cli::{execute, Cli};
use reasonenv_core::prompt::{builtin_labels, last_user_turn, render_with, InstructionPlacement};
use reasonenv_core::selection::{compose_indices, query_rng, weighted_draw};
use reasonenv_core::{
    bin_and_aggregate, carb_score, estimate_sd, hws_distance, parse_bracketed, parse_tuples, pearson, render,
    render_tuples, spearman, BinMode, Candidate, EventMention, Gold, HwsConfig, KnowledgeTuple, ParseTree,
    PromptTemplate, SelectionConfig, Task,
};
use reasonenv_eval::harness::parallel_map;
use reasonenv_eval::{pool_size_sweep, subsample, EvalConfig};
use reasonenv_gateway::TableRow;
use reasonenv_oracles::{brute_force_carb, brute_force_hws, random_tree, random_tuple, resum_sd};
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Check = (u32, &'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_secs) {
        Err(format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    } else {
        Ok(())
    }
}

/// Runs the command line in-process and returns what it printed.
fn cli(args: &[&str]) -> Result<String, String> {
    let argv = std::iter::once("reasonenv").chain(args.iter().copied());
    let parsed = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    execute(&parsed, &mut out).map_err(|e| format!("{e:#}"))?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn write_lines(path: &Path, rows: impl IntoIterator<Item = Value>) {
    let text: String = rows.into_iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn jsonl_body(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const VOCAB: [&str; 10] = ["the", "dog", "chased", "a", "cat", "in", "park", "quickly", "Paris", "visited"];

// 1 --------------------------------------------------------------------

fn tree_metric_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let cfg = HwsConfig::default();
    let d = |a: &ParseTree, b: &ParseTree| hws_distance(a, b, &cfg).unwrap();
    for i in 0..500 {
        let sizes: Vec<usize> = (0..3).map(|_| rng.random_range(1..=8)).collect();
        let [a, b, c] = [0, 1, 2].map(|k| random_tree(&mut rng, sizes[k]));
        let ab = d(&a, &b);
        check!(ab == d(&b, &a), "pair {i}: asymmetric");
        check!(d(&a, &a) == 0.0, "pair {i}: d(t,t) = {}", d(&a, &a));
        check!((0.0..=1.0).contains(&ab), "pair {i}: d = {ab} out of range");
        let (ac, cb) = (d(&a, &c), d(&c, &b));
        check!(ab <= ac + cb + 1e-12, "pair {i}: triangle {ab} > {ac} + {cb}");
        let oracle = brute_force_hws(&a, &b, cfg.decay);
        check!(ab == oracle, "pair {i}: {ab} vs exhaustive {oracle}");
    }
    within(start.elapsed(), 30)?;
    Ok("500 pairs: symmetry, identity, range, triangle, exhaustive-oracle equality".into())
}

// 2 --------------------------------------------------------------------

fn carb_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    for i in 0..200 {
        let np = rng.random_range(0..=4);
        let ng = rng.random_range(1..=4);
        let preds: Vec<KnowledgeTuple> = (0..np).map(|_| random_tuple(&mut rng, &VOCAB)).collect();
        let golds: Vec<KnowledgeTuple> = (0..ng).map(|_| random_tuple(&mut rng, &VOCAB)).collect();
        let s = carb_score(&preds, &golds);
        let (p, r) = brute_force_carb(&preds, &golds);
        check!(s.recall == r, "instance {i}: recall {} vs oracle {r}", s.recall);
        check!(s.precision == p, "instance {i}: precision {} vs oracle {p}", s.precision);
        let same = carb_score(&golds, &golds);
        check!((same.precision, same.recall, same.f1) == (1.0, 1.0, 1.0), "instance {i}: self score {same:?}");
        let empty = carb_score(&[], &golds);
        check!((empty.precision, empty.recall, empty.f1) == (0.0, 0.0, 0.0), "instance {i}: empty {empty:?}");
    }
    within(start.elapsed(), 10)?;
    Ok("200 instances equal the exhaustive assignment oracle; identical (1,1,1); empty (0,0,0)".into())
}

// 3 --------------------------------------------------------------------

fn clique_estimator() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let cfg = HwsConfig::default();
    let f = |a: &ParseTree, b: &ParseTree| hws_distance(a, b, &cfg).unwrap();
    let mut worst_scale = 0.0f64;
    for i in 0..100 {
        let m = rng.random_range(1..=4);
        let sized = |rng: &mut StdRng| {
            let size = rng.random_range(1..=8);
            random_tree(rng, size)
        };
        let source: Vec<ParseTree> = (0..=m).map(|_| sized(&mut rng)).collect();
        let target: Vec<ParseTree> = (0..=m).map(|_| sized(&mut rng)).collect();
        let d = estimate_sd(&source, &target, f).unwrap();
        let oracle = resum_sd(&source, &target, f);
        for (j, (a, b)) in d.iter().zip(&oracle).enumerate() {
            check!((a - b).abs() <= 1e-12, "clique {i}, member {j}: {a} vs re-summed {b}");
        }
        // permuting the targets other than j leaves d[j] alone
        for j in 0..=m {
            let mut others: Vec<usize> = (0..=m).filter(|&l| l != j).collect();
            others.shuffle(&mut rng);
            let mut permuted = target.clone();
            for (slot, &from) in (0..=m).filter(|&l| l != j).zip(&others) {
                permuted[slot] = target[from].clone();
            }
            let dp = estimate_sd(&source, &permuted, f).unwrap();
            check!((dp[j] - d[j]).abs() <= 1e-12, "clique {i}, member {j}: permuted {} vs {}", dp[j], d[j]);
        }
        let scaled = estimate_sd(&source, &target, |a, b| 3.0 * f(a, b)).unwrap();
        for (s, b) in scaled.iter().zip(&d) {
            // equal up to the rounding of one multiply and one divide
            check!((s - 3.0 * b).abs() <= 4.0 * f64::EPSILON * (3.0 * b).abs(), "clique {i}: scaled {s} vs 3 x {b}");
            worst_scale = worst_scale.max((s - 3.0 * b).abs());
        }
    }
    Ok(format!(
        "100 cliques: re-summation within 1e-12, permutation invariant, scaling by 3 (max abs diff {worst_scale:.1e})"
    ))
}

// 4 --------------------------------------------------------------------

fn oie_candidate(rng: &mut StdRng, id: String, clique: String) -> Value {
    let words: Vec<&str> = (0..5).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    let k = rng.random_range(1..=3);
    let tuples: Vec<KnowledgeTuple> = (0..k)
        .map(|j| KnowledgeTuple::new(words[j + 1], words[j], Some(words[j + 2])).unwrap())
        .collect();
    let size = rng.random_range(2..=10);
    json!({
        "id": id,
        "clique_id": clique,
        "sentence": format!("{} ({id})", words.join(" ")),
        "tree": random_tree(rng, size).to_bracketed(),
        "tuples": tuples,
    })
}

fn sampler_fidelity() -> Outcome {
    // frequency of the first of two candidates
    let distances = [0.25, 0.7];
    let w = reasonenv_core::weights_from_discrepancies(&distances, 1e-6).unwrap();
    let draws = 100_000;
    let mut hits = 0;
    for k in 0..draws {
        let mut rng = query_rng(4, &format!("draw-{k}"));
        if weighted_draw(&w, 1, &mut rng)[0] == 0 {
            hits += 1;
        }
    }
    let freq = hits as f64 / draws as f64;
    check!((freq - w[0]).abs() <= 0.01, "frequency {freq} vs weight {}", w[0]);

    // exclusion and determinism through the command line
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.jsonl");
    let mut rng = StdRng::seed_from_u64(4);
    write_lines(&data, (0..90).map(|i| oie_candidate(&mut rng, format!("s{i:03}"), format!("k{:02}", i / 3))));
    let out = dir.path().join("out");
    let mut violations = 0;
    let mut lines = 0;
    let mut snapshots = Vec::new();
    for mode in ["sampled", "composed"] {
        let args = [
            "select", "--dataset", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n", "5",
            "--mode", mode, "--seed", "11", "--pool-size", "20,60",
        ];
        cli(&args)?;
        let first = fs::read(out.join("selections.jsonl")).unwrap();
        cli(&args)?;
        let second = fs::read(out.join("selections.jsonl")).unwrap();
        check!(first == second, "{mode}: selections differ between identical runs");
        for row in jsonl_body(&out.join("selections.jsonl")) {
            lines += 1;
            let q = row["query_id"].as_str().unwrap();
            let qc: usize = q[1..].parse::<usize>().unwrap() / 3;
            for d in row["demo_ids"].as_array().unwrap() {
                let dc: usize = d.as_str().unwrap()[1..].parse::<usize>().unwrap() / 3;
                if dc == qc {
                    violations += 1;
                }
            }
        }
        snapshots.push(first);
    }
    check!(snapshots[0] != snapshots[1], "sampled and composed selections coincide");
    check!(violations == 0, "{violations} clique-exclusion violations");
    Ok(format!(
        "frequency {freq:.4} vs weight {:.4}; {lines} selections, 0 exclusion violations; reruns byte-identical",
        w[0]
    ))
}

// 5 --------------------------------------------------------------------

/// Every valid composed selection of `n` out of the pool, found by checking
/// all subsets against the rule: the nearest `n - 1` by (distance, id) plus
/// one member of the farthest quartile of the rest.
fn valid_compositions(distances: &[f64], ids: &[String], n: usize) -> HashSet<Vec<usize>> {
    let len = distances.len();
    let nearer = |a: usize, b: usize| (distances[a], &ids[a]) < (distances[b], &ids[b]);
    let farther = |a: usize, b: usize| distances[a] > distances[b] || (distances[a] == distances[b] && ids[a] < ids[b]);
    let similar: Vec<usize> = {
        let mut s: Vec<usize> = (0..len).filter(|&a| (0..len).filter(|&b| nearer(b, a)).count() < n - 1).collect();
        s.sort_by(|&a, &b| (distances[a], &ids[a]).partial_cmp(&(distances[b], &ids[b])).unwrap());
        s
    };
    let rest: Vec<usize> = (0..len).filter(|a| !similar.contains(a)).collect();
    let quartile = len.div_ceil(4);
    let mut valid = HashSet::new();
    for &e in &rest {
        let beaten_by = rest.iter().filter(|&&o| farther(o, e)).count();
        if beaten_by < quartile {
            let mut sel = similar.clone();
            sel.push(e);
            valid.insert(sel);
        }
    }
    valid
}

fn eight_two_composition() -> Outcome {
    for (n, want) in [(3, (2, 1)), (4, (3, 1)), (5, (4, 1)), (6, (5, 1)), (7, (6, 1))] {
        let cfg = SelectionConfig { n, ratio: 0.8, ..SelectionConfig::default() };
        check!(cfg.split() == want, "n = {n}: split {:?}, want {want:?}", cfg.split());
    }
    let mut rng = StdRng::seed_from_u64(5);
    let mut pools = 0;
    for _ in 0..20 {
        let ids: Vec<String> = (0..12).map(|i| format!("c{:02}", (i * 7) % 12)).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        // coarse distances so ties exercise the id tie-break
        let distances: Vec<f64> = (0..12).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
        for n in 3..=7 {
            let cfg = SelectionConfig { n, ratio: 0.8, ..SelectionConfig::default() };
            let valid = valid_compositions(&distances, &ids, n);
            let mut seen = HashSet::new();
            for seed in 0..300u64 {
                let got = compose_indices(&distances, &refs, &cfg, &mut StdRng::seed_from_u64(seed)).unwrap();
                check!(valid.contains(&got), "n = {n}: {got:?} is not a valid composition of {distances:?}");
                seen.insert(got);
            }
            check!(seen == valid, "n = {n}: reached {} of {} valid compositions", seen.len(), valid.len());
            pools += 1;
        }
    }
    Ok(format!("split table n = 3..7 at 0.8; {pools} enumerated 12-candidate pools"))
}

// 6 --------------------------------------------------------------------

fn pool_sweep_shape() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(6);
    let tree = |rng: &mut StdRng| {
        let size = rng.random_range(2..=12);
        random_tree(rng, size)
    };
    let candidate = |id: String, tree: ParseTree| Candidate {
        clique_id: id.clone(),
        id,
        sentence: String::new(),
        tree: Some(tree),
        gold: Gold::Tuples(Vec::new()),
        label: None,
        extracted: None,
    };
    let pool: Vec<Candidate> = (0..4932).map(|i| candidate(format!("p{i:04}"), tree(&mut rng))).collect();
    let queries: Vec<Candidate> = (0..100).map(|i| candidate(format!("q{i:03}"), tree(&mut rng))).collect();
    let hws = HwsConfig::default();
    let matrix: Vec<Vec<f64>> = parallel_map(&queries, 8, |q| {
        pool.iter()
            .map(|c| hws_distance(q.tree.as_ref().unwrap(), c.tree.as_ref().unwrap(), &hws).unwrap())
            .collect()
    });

    let sizes = [50, 200, 1272, 4932];
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let mut negative = 0;
    let mut first_last = (0.0, 0.0);
    let query_idx: Vec<usize> = (0..queries.len()).collect();
    for trial in 0..100u64 {
        let picked = subsample(&query_idx, 20, trial);
        let qs: Vec<Candidate> = picked.iter().map(|&i| queries[i].clone()).collect();
        let cfg = EvalConfig { n_shots: 6, seed: trial, workers: 8, ..EvalConfig::default() };
        let points = pool_size_sweep(&qs, &pool, &sizes, &cfg, |q, c| Ok(matrix[picked[q]][c])).map_err(|e| e.to_string())?;
        check!(points.iter().all(|p| p.skipped == 0), "trial {trial}: skipped queries");
        let ys: Vec<f64> = points.iter().map(|p| p.mean_distance).collect();
        if spearman(&xs, &ys).map_err(|e| e.to_string())? < 0.0 {
            negative += 1;
        }
        first_last.0 += ys[0] / 100.0;
        first_last.1 += ys[3] / 100.0;
    }
    within(start.elapsed(), 300)?;
    check!(negative >= 95, "spearman < 0 in only {negative}/100 trials");
    Ok(format!(
        "spearman < 0 in {negative}/100 trials; mean selected distance {:.3} at 50 -> {:.3} at 4932",
        first_last.0, first_last.1
    ))
}

// 7 --------------------------------------------------------------------

fn gold_tuples(clique: usize, count: usize) -> Vec<KnowledgeTuple> {
    (0..count)
        .map(|t| {
            let tag = format!("{clique}x{t}");
            KnowledgeTuple::new(&format!("rel{tag}"), &format!("head{tag}"), Some(&format!("tail{tag}"))).unwrap()
        })
        .collect()
}

fn discrepancy_shape() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let hws = HwsConfig::default();
    let paraphrase = PromptTemplate::builtin(Task::Paraphrase);
    let oie = PromptTemplate::builtin(Task::Oie);
    let turn = |msgs: Vec<reasonenv_core::Message>| last_user_turn(&msgs).unwrap().to_string();
    let gold_size = 40;

    let (mut cliques, mut trees, mut table) = (Vec::new(), Vec::new(), Vec::new());
    let candidates: Vec<ParseTree> = (0..400)
        .map(|_| {
            let size = rng.random_range(1..=14);
            random_tree(&mut rng, size)
        })
        .collect();
    for i in 0..256 {
        let sources = [format!("source {i} a"), format!("source {i} b")];
        let targets = [format!("model {i} a"), format!("model {i} b")];
        let source_trees = [random_tree(&mut rng, 8), random_tree(&mut rng, 8)];
        // the target paired with source 0 is chosen to land near a goal distance
        let goal = i as f64 / 255.0;
        let target_b = std::iter::once(source_trees[0].clone())
            .chain(candidates.iter().cloned())
            .min_by(|x, y| {
                let dx = (hws_distance(&source_trees[0], x, &hws).unwrap() - goal).abs();
                let dy = (hws_distance(&source_trees[0], y, &hws).unwrap() - goal).abs();
                dx.total_cmp(&dy)
            })
            .unwrap();
        let target_trees = [random_tree(&mut rng, 8), target_b];
        // with two members, d of the original is f(source 0, target 1)
        let d = estimate_sd(&source_trees, &target_trees, |a, b| hws_distance(a, b, &hws).unwrap()).unwrap()[0];
        // the mock answers correctly on a 1 - d share of the gold tuples
        let accuracy = 1.0 - d;
        let k = ((gold_size as f64 * accuracy / (2.0 - accuracy)).round() as usize).min(gold_size);
        let gold = gold_tuples(i, gold_size);
        let query = turn(render_with(&oie, &[], &sources[0], None, InstructionPlacement::System).unwrap());
        table.push(TableRow { prompt: query, response: render_tuples(&gold[..k]) });
        for j in 0..2 {
            let prompt = turn(render(&paraphrase, &[], &sources[j], None).unwrap());
            table.push(TableRow { prompt, response: format!("\"{}\"", targets[j]) });
            trees.push(json!({"sentence": sources[j], "tree": source_trees[j].to_bracketed()}));
            trees.push(json!({"sentence": targets[j], "tree": target_trees[j].to_bracketed()}));
        }
        cliques.push(json!({"id": format!("c{i:03}"), "sentences": sources, "gold": gold}));
    }
    let (cliques_path, trees_path, table_path) =
        (dir.path().join("cliques.jsonl"), dir.path().join("trees.jsonl"), dir.path().join("table.jsonl"));
    write_lines(&cliques_path, cliques);
    write_lines(&trees_path, trees);
    write_lines(&table_path, table.iter().map(|r| serde_json::to_value(r).unwrap()));
    let out = dir.path().join("out");
    let endpoint = format!("mock:table:{}", table_path.display());
    cli(&[
        "estimate", "--task", "oie", "--cliques", cliques_path.to_str().unwrap(), "--trees", trees_path.to_str().unwrap(),
        "--endpoint", &endpoint, "--out", out.to_str().unwrap(), "--bins", "5",
    ])?;
    let report = read_json(&out.join("estimate.json"))["report"].clone();
    let r = report["pearson_r"].as_f64().ok_or("no pearson r")?;
    let means: Vec<f64> = report["bins"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|b| b["count"].as_u64().unwrap() > 0)
        .map(|b| b["mean_p"].as_f64().unwrap())
        .collect();
    within(start.elapsed(), 60)?;
    check!(means.len() >= 2, "only {} occupied bins", means.len());
    check!(means.windows(2).all(|w| w[1] < w[0]), "bin means not strictly decreasing: {means:?}");
    check!(r < -0.9, "pearson r = {r}");
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
    Ok(format!("r = {r:.4}; mean p per occupied bin [{}]", shown.join(", ")))
}

// 8 --------------------------------------------------------------------

fn task_dataset(task: Task, rng: &mut StdRng, n: usize) -> Vec<Value> {
    let labels = builtin_labels(task).unwrap_or_default();
    (0..n)
        .map(|i| {
            let id = format!("s{i:03}");
            let clique = format!("k{:02}", i / 3);
            let words: Vec<&str> = (0..5).map(|_| *VOCAB.choose(rng).unwrap()).collect();
            let size = rng.random_range(2..=10);
            let tree = random_tree(rng, size).to_bracketed();
            match task {
                Task::Re => {
                    // every fourth sample is a negative
                    let label = if i % 4 == 0 { "no_relation".to_string() } else { labels.choose(rng).unwrap().clone() };
                    json!({
                        "id": id, "clique_id": clique, "tree": tree, "label": label,
                        "head": words[0], "tail": words[2],
                        "sentence_with_markers": format!("<entity>{}</entity> {} <entity>{}</entity> {i}", words[0], words[1], words[2]),
                    })
                }
                Task::Ee => {
                    let events: Vec<EventMention> = (0..rng.random_range(0..=2))
                        .map(|j| EventMention::new(words[j + 1], labels.choose(rng).unwrap().clone()))
                        .collect();
                    json!({"id": id, "clique_id": clique, "tree": tree, "sentence": format!("{} {i}", words.join(" ")), "events": events})
                }
                _ => oie_candidate(rng, id, clique),
            }
        })
        .collect()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn oracle_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(8);
    let mut shown = Vec::new();
    for task in [Task::Oie, Task::Re, Task::Ee] {
        let data = dir.path().join(format!("{task}.jsonl"));
        write_lines(&data, task_dataset(task, &mut rng, 90));
        let out = dir.path().join(format!("out-{task}"));
        let cache = dir.path().join(format!("cache-{task}.jsonl"));
        let run = || {
            cli(&[
                "run", "--task", task.as_str(), "--dataset", data.to_str().unwrap(), "--endpoint", "mock:oracle",
                "--cache", cache.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n", "4", "--pool-size", "30,80",
                "--seed", "3",
            ])
        };
        run()?;
        let summary = read_json(&out.join("summary.json"));
        for s in summary["summaries"].as_array().unwrap() {
            let f1 = s["f1"].as_f64().unwrap();
            check!(f1 == 1.0, "{task} pool {}: f1 = {f1}", s["pool_size"]);
            check!(s["count"] == 90 && s["flagged"] == 0, "{task}: {s}");
        }
        for rec in jsonl_body(&out.join("records.jsonl")) {
            let q = rec["clique_id"].as_str().unwrap();
            for d in rec["demo_ids"].as_array().unwrap() {
                let c = format!("k{:02}", d.as_str().unwrap()[1..].parse::<usize>().unwrap() / 3);
                check!(c != q, "{task}: demo {d} shares clique {q}");
            }
        }
        let before = (snapshot(&out), fs::read(&cache).unwrap());
        run()?;
        let after = (snapshot(&out), fs::read(&cache).unwrap());
        check!(before == after, "{task}: warm-cache rerun changed the outputs");
        shown.push(format!("{task} f1 = 1.0"));
    }
    Ok(format!("{}; warm-cache reruns byte-identical", shown.join(", ")))
}

// 9 --------------------------------------------------------------------

fn round_trips() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    for i in 0..1000 {
        let k = rng.random_range(1..=3);
        let tuples: Vec<KnowledgeTuple> = (0..k).map(|_| random_tuple(&mut rng, &VOCAB)).collect();
        let text = render_tuples(&tuples);
        check!(parse_tuples(&text) == tuples, "tuple set {i}: `{text}` parsed differently");
    }
    for i in 0..1000 {
        let size = rng.random_range(1..=20);
        let tree = random_tree(&mut rng, size);
        let text = tree.to_bracketed();
        let back = parse_bracketed(&text).map_err(|e| format!("tree {i}: {e}"))?;
        check!(back == tree, "tree {i}: `{text}` parsed differently");
    }
    Ok("1000 tuple sets and 1000 trees".into())
}

// 10 -------------------------------------------------------------------

fn statistics() -> Outcome {
    let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).map_err(|e| e.to_string())?;
    check!(r == 1.0, "pearson = {r}");
    let mut rng = StdRng::seed_from_u64(10);
    for i in 0..200 {
        let n = rng.random_range(3..60);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let base = pearson(&xs, &ys).map_err(|e| e.to_string())?;
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-20.0..20.0);
        let tx: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let moved = pearson(&tx, &ys).map_err(|e| e.to_string())?;
        check!((moved - base).abs() <= 1e-12, "sample {i}: {moved} vs {base}");
        let pairs: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(&x, &y)| (x, y)).collect();
        for mode in [BinMode::EqualWidth, BinMode::Quantile] {
            let k = rng.random_range(1..=8);
            let bins = bin_and_aggregate(&pairs, k, mode).map_err(|e| e.to_string())?;
            let total: usize = bins.iter().map(|b| b.count).sum();
            check!(total == n, "sample {i}, {mode:?}: {total} binned of {n}");
        }
    }
    Ok("pearson([1,2,3],[2,4,6]) = 1; affine invariance within 1e-12; bins conserve counts".into())
}

fn main() {
    let checks: [Check; 10] = [
        (1, "tree metric axioms", tree_metric_axioms),
        (2, "tuple scorer oracle", carb_oracle),
        (3, "clique discrepancy estimate", clique_estimator),
        (4, "sampler fidelity", sampler_fidelity),
        (5, "8:2 composition", eight_two_composition),
        (6, "pool-size sweep shape", pool_sweep_shape),
        (7, "discrepancy vs accuracy shape", discrepancy_shape),
        (8, "oracle end to end", oracle_end_to_end),
        (9, "round trips", round_trips),
        (10, "statistics", statistics),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in checks {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
