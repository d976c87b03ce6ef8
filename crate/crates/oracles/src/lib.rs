//! Slow, obviously-correct reference computations and random generators.
//!
//! Nothing here calls into the algorithms it is used to check; only the
//! plain data types of `reasonenv-core` are shared.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::Rng;
use reasonenv_core::{KnowledgeTuple, Node, ParseTree};

// ---------------------------------------------------------------------------
// Tree edit distance by enumerating every ordered mapping
// ---------------------------------------------------------------------------

struct Info {
    label: String,
    pre: usize,
    post: usize,
    weight: f64,
}

fn flatten(tree: &ParseTree, decay: f64) -> Vec<Info> {
    fn go(n: &Node, depth: usize, decay: f64, pre: &mut usize, post: &mut usize, out: &mut Vec<Info>) {
        let slot = out.len();
        out.push(Info {
            label: n.label.clone(),
            pre: *pre,
            post: 0,
            weight: decay.powi(depth as i32),
        });
        *pre += 1;
        for c in &n.children {
            go(c, depth + 1, decay, pre, post, out);
        }
        out[slot].post = *post;
        *post += 1;
    }
    let mut out = Vec::new();
    go(tree.root(), 0, decay, &mut 0, &mut 0, &mut out);
    out
}

/// Minimum over all valid ordered mappings (one-to-one, preserving ancestry
/// and sibling order) of the mapping cost, with depth-weighted node costs.
/// Returns `(raw cost, W(a), W(b))`.
pub fn brute_force_ted(a: &ParseTree, b: &ParseTree, decay: f64) -> (f64, f64, f64) {
    let fa = flatten(a, decay);
    let fb = flatten(b, decay);
    let wa: f64 = fa.iter().map(|n| n.weight).sum();
    let wb: f64 = fb.iter().map(|n| n.weight).sum();

    let mut best = f64::INFINITY;
    let mut mapping: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; fb.len()];

    fn cost_of(fa: &[Info], fb: &[Info], mapping: &[(usize, usize)]) -> f64 {
        let mut mapped_a = vec![false; fa.len()];
        let mut mapped_b = vec![false; fb.len()];
        let mut c = 0.0;
        for &(i, j) in mapping {
            mapped_a[i] = true;
            mapped_b[j] = true;
            c += if fa[i].label == fb[j].label {
                (fa[i].weight - fb[j].weight).abs()
            } else {
                fa[i].weight + fb[j].weight
            };
        }
        c += fa.iter().zip(&mapped_a).filter(|(_, m)| !**m).map(|(n, _)| n.weight).sum::<f64>();
        c += fb.iter().zip(&mapped_b).filter(|(_, m)| !**m).map(|(n, _)| n.weight).sum::<f64>();
        c
    }

    fn rec(
        i: usize,
        fa: &[Info],
        fb: &[Info],
        mapping: &mut Vec<(usize, usize)>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if i == fa.len() {
            *best = best.min(cost_of(fa, fb, mapping));
            return;
        }
        rec(i + 1, fa, fb, mapping, used, best);
        for j in 0..fb.len() {
            if used[j] {
                continue;
            }
            let ok = mapping.iter().all(|&(i2, j2)| {
                (fa[i2].pre < fa[i].pre) == (fb[j2].pre < fb[j].pre)
                    && (fa[i2].post < fa[i].post) == (fb[j2].post < fb[j].post)
            });
            if ok {
                used[j] = true;
                mapping.push((i, j));
                rec(i + 1, fa, fb, mapping, used, best);
                mapping.pop();
                used[j] = false;
            }
        }
    }

    rec(0, &fa, &fb, &mut mapping, &mut used, &mut best);
    (best, wa, wb)
}

/// Normalized brute-force distance `2d / (W(a) + W(b) + d)`.
pub fn brute_force_hws(a: &ParseTree, b: &ParseTree, decay: f64) -> f64 {
    let (d, wa, wb) = brute_force_ted(a, b, decay);
    2.0 * d / (wa + wb + d)
}

/// Label-only shape of a tree, used to decide "structurally identical".
pub fn label_shape(n: &Node) -> String {
    if n.children.is_empty() {
        format!("({})", n.label)
    } else {
        let inner: Vec<String> = n.children.iter().map(label_shape).collect();
        format!("({} {})", n.label, inner.join(" "))
    }
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

pub const PHRASE_LABELS: [&str; 6] = ["S", "NP", "VP", "PP", "SBAR", "ADJP"];
pub const POS_LABELS: [&str; 6] = ["DT", "NN", "VBZ", "IN", "JJ", "PRP"];
const WORDS: [&str; 8] = ["the", "dog", "runs", "in", "park", "it", "-LRB-", "n't"];

/// A random tree with exactly `size` nodes (size >= 1).
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, size: usize) -> ParseTree {
    fn build<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Node {
        if size == 1 {
            return Node::leaf(*POS_LABELS.choose(rng).unwrap(), *WORDS.choose(rng).unwrap());
        }
        // split size - 1 remaining nodes among 1..=3 children
        let mut remaining = size - 1;
        let max_children = remaining.min(3);
        let k = rng.random_range(1..=max_children);
        let mut children = Vec::with_capacity(k);
        for c in 0..k {
            let left = k - c - 1;
            let take = if left == 0 {
                remaining
            } else {
                rng.random_range(1..=remaining - left)
            };
            children.push(build(rng, take));
            remaining -= take;
        }
        Node::internal(*PHRASE_LABELS.choose(rng).unwrap(), children)
    }
    ParseTree::new(build(rng, size.max(1)))
}

fn random_phrase<R: Rng + ?Sized>(rng: &mut R, vocab: &[&str], max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| *vocab.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A random valid tuple; optional slots are filled at random.
pub fn random_tuple<R: Rng + ?Sized>(rng: &mut R, vocab: &[&str]) -> KnowledgeTuple {
    let mut slots = vec![random_phrase(rng, vocab, 3), random_phrase(rng, vocab, 3)];
    for _ in 0..3 {
        slots.push(if rng.random_bool(0.6) {
            random_phrase(rng, vocab, 4)
        } else {
            String::new()
        });
    }
    while slots.last().is_some_and(String::is_empty) && slots.len() > 2 {
        slots.pop();
    }
    KnowledgeTuple::from_slots(&slots).expect("generated slots are valid")
}

// ---------------------------------------------------------------------------
// CaRB-style scoring by exhaustive assignment
// ---------------------------------------------------------------------------

fn tokens(s: Option<&str>) -> Vec<String> {
    let Some(s) = s else { return Vec::new() };
    let cleaned: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    cleaned.split_whitespace().map(String::from).collect()
}

/// (matched, pred token count, gold token count)
fn pair_counts(p: &KnowledgeTuple, g: &KnowledgeTuple) -> (usize, usize, usize) {
    let ps = [Some(p.predicate.as_str()), Some(p.subject.as_str()), p.object.as_deref(), p.time.as_deref(), p.place.as_deref()];
    let gs = [Some(g.predicate.as_str()), Some(g.subject.as_str()), g.object.as_deref(), g.time.as_deref(), g.place.as_deref()];
    let (mut m, mut np, mut ng) = (0, 0, 0);
    for (a, b) in ps.iter().zip(gs.iter()) {
        let ta = tokens(*a);
        let mut tb = tokens(*b);
        np += ta.len();
        ng += tb.len();
        for t in ta {
            if let Some(pos) = tb.iter().position(|x| *x == t) {
                tb.remove(pos);
                m += 1;
            }
        }
    }
    (m, np, ng)
}

fn q(n: usize, d: usize) -> BigRational {
    if d == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
}

/// Precision and recall by enumerating every one-to-one gold→pred
/// assignment and keeping the best by (total F1, total recall).
pub fn brute_force_carb(preds: &[KnowledgeTuple], golds: &[KnowledgeTuple]) -> (f64, f64) {
    if preds.is_empty() || golds.is_empty() {
        return (0.0, 0.0);
    }
    let counts: Vec<Vec<(usize, usize, usize)>> =
        preds.iter().map(|p| golds.iter().map(|g| pair_counts(p, g)).collect()).collect();

    let mut prec = BigRational::zero();
    for row in &counts {
        prec += row.iter().map(|&(m, np, _)| q(m, np)).max().unwrap();
    }
    prec /= BigRational::from_integer(BigInt::from(preds.len()));

    // assign[g] = Some(p); every pred used at most once
    let mut best: Option<(BigRational, BigRational)> = None;
    fn rec(
        g: usize,
        counts: &[Vec<(usize, usize, usize)>],
        n_golds: usize,
        used: &mut Vec<bool>,
        f1: BigRational,
        rec_sum: BigRational,
        best: &mut Option<(BigRational, BigRational)>,
    ) {
        if g == n_golds {
            let cand = (f1, rec_sum);
            if best.as_ref().is_none_or(|b| cand > *b) {
                *best = Some(cand);
            }
            return;
        }
        rec(g + 1, counts, n_golds, used, f1.clone(), rec_sum.clone(), best);
        for p in 0..counts.len() {
            if !used[p] {
                used[p] = true;
                let (m, np, ng) = counts[p][g];
                rec(g + 1, counts, n_golds, used, f1.clone() + q(2 * m, np + ng), rec_sum.clone() + q(m, ng), best);
                used[p] = false;
            }
        }
    }
    rec(0, &counts, golds.len(), &mut vec![false; preds.len()], BigRational::zero(), BigRational::zero(), &mut best);
    let recall = best.unwrap().1 / BigRational::from_integer(BigInt::from(golds.len()));
    (prec.to_f64().unwrap(), recall.to_f64().unwrap())
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// The clique discrepancy by a different route: full row sum of the metric
/// matrix minus the diagonal term, over m.
pub fn resum_sd<T>(source: &[T], target: &[T], metric: impl Fn(&T, &T) -> f64) -> Vec<f64> {
    let m = (source.len() - 1) as f64;
    let matrix: Vec<Vec<f64>> = source.iter().map(|x| target.iter().map(|y| metric(x, y)).collect()).collect();
    matrix
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let mut off_diag = 0.0;
            for (l, v) in row.iter().enumerate() {
                if l != j {
                    off_diag += v;
                }
            }
            off_diag / m
        })
        .collect()
}

/// Textbook one-pass Pearson from raw moments.
pub fn pearson_one_pass(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Micro P/R/F1 over labels other than `negative`, via a full confusion
/// matrix. With `include_negative` the negative label counts as a class.
pub fn confusion_micro_f1(gold: &[&str], pred: &[&str], negative: &str, include_negative: bool) -> (f64, f64, f64) {
    let mut confusion: HashMap<(&str, &str), usize> = HashMap::new();
    for (&g, &p) in gold.iter().zip(pred) {
        *confusion.entry((g, p)).or_default() += 1;
    }
    let counts = |keep: &dyn Fn(&str, &str) -> bool| -> usize {
        confusion.iter().filter(|((g, p), _)| keep(g, p)).map(|(_, c)| c).sum()
    };
    let positive = |l: &str| include_negative || l != negative;
    let tp = counts(&|g, p| g == p && positive(g));
    let guessed = counts(&|_, p| positive(p));
    let actual = counts(&|g, _| positive(g));
    let p = if guessed == 0 { 0.0 } else { tp as f64 / guessed as f64 };
    let r = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}
