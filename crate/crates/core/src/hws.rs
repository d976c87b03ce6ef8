//! Hierarchically weighted syntactic (HWS) distance.
//!
//! An ordered tree edit distance where every node at depth `k` weighs
//! `decay^k`. Deleting or inserting a node costs its weight. Mapping two
//! nodes with the same label costs the difference of their weights; mapping
//! nodes with different labels costs the sum, which is the same as deleting
//! one and inserting the other. Tokens never enter the cost: leaves are
//! compared by their POS label.
//!
//! The node cost is a metric on (label, weight) pairs, so the raw edit
//! distance is a metric on trees. The normalized form is the Steinhaus
//! transform of the raw distance around the empty tree,
//! `2 d / (W(a) + W(b) + d)`, which stays a metric, lies in `[0, 1]` and
//! reaches 1 exactly when no node can be kept.

use serde::{Deserialize, Serialize};

use crate::error::HwsError;
use crate::tree::{Node, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HwsConfig {
    /// Weight factor applied per level of depth.
    pub decay: f64,
    /// Nodes deeper than this are ignored.
    pub max_depth: Option<usize>,
    pub normalize: bool,
}

impl Default for HwsConfig {
    fn default() -> Self {
        HwsConfig {
            decay: 0.5,
            max_depth: None,
            normalize: true,
        }
    }
}

impl HwsConfig {
    pub fn validate(&self) -> Result<(), HwsError> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(HwsError::InvalidDecay(self.decay));
        }
        if self.max_depth == Some(0) {
            return Err(HwsError::InvalidMaxDepth);
        }
        Ok(())
    }

    pub fn weight_at(&self, depth: usize) -> f64 {
        self.decay.powi(depth as i32)
    }
}

/// Postorder flattening of a tree with the data Zhang–Shasha needs.
struct Flat<'a> {
    labels: Vec<&'a str>,
    weights: Vec<f64>,
    /// Postorder index of the leftmost leaf descendant.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Flat<'a> {
    fn new(tree: &'a ParseTree, cfg: &HwsConfig) -> Self {
        let mut flat = Flat {
            labels: Vec::new(),
            weights: Vec::new(),
            leftmost: Vec::new(),
            keyroots: Vec::new(),
        };
        flat.visit(tree.root(), 0, cfg);

        let n = flat.labels.len();
        let mut seen = vec![false; n];
        for i in (0..n).rev() {
            let l = flat.leftmost[i];
            if !seen[l] {
                seen[l] = true;
                flat.keyroots.push(i);
            }
        }
        flat.keyroots.sort_unstable();
        flat
    }

    /// Appends the subtree in postorder and returns its leftmost leaf index.
    fn visit(&mut self, node: &'a Node, depth: usize, cfg: &HwsConfig) -> usize {
        let mut first = None;
        if cfg.max_depth.is_none_or(|m| depth < m) {
            for child in &node.children {
                let l = self.visit(child, depth + 1, cfg);
                first.get_or_insert(l);
            }
        }
        let idx = self.labels.len();
        let leftmost = first.unwrap_or(idx);
        self.labels.push(&node.label);
        self.weights.push(cfg.weight_at(depth));
        self.leftmost.push(leftmost);
        leftmost
    }

    fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn map_cost(a: &Flat<'_>, i: usize, b: &Flat<'_>, j: usize) -> f64 {
    if a.labels[i] == b.labels[j] {
        (a.weights[i] - b.weights[j]).abs()
    } else {
        a.weights[i] + b.weights[j]
    }
}

/// Zhang–Shasha over the two flattened trees; returns the raw edit cost.
fn edit_cost(a: &Flat<'_>, b: &Flat<'_>) -> f64 {
    let (na, nb) = (a.labels.len(), b.labels.len());
    let mut tree_dist = vec![vec![0.0f64; nb]; na];
    let mut forest = vec![vec![0.0f64; nb + 1]; na + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.leftmost[i], b.leftmost[j]);
            // forest[x][y]: distance between a[li..li+x) and b[lj..lj+y)
            forest[0][0] = 0.0;
            for x in 1..=(i - li + 1) {
                forest[x][0] = forest[x - 1][0] + a.weights[li + x - 1];
            }
            for y in 1..=(j - lj + 1) {
                forest[0][y] = forest[0][y - 1] + b.weights[lj + y - 1];
            }
            for x in 1..=(i - li + 1) {
                let i1 = li + x - 1;
                for y in 1..=(j - lj + 1) {
                    let j1 = lj + y - 1;
                    let delete = forest[x - 1][y] + a.weights[i1];
                    let insert = forest[x][y - 1] + b.weights[j1];
                    if a.leftmost[i1] == li && b.leftmost[j1] == lj {
                        let relabel = forest[x - 1][y - 1] + map_cost(a, i1, b, j1);
                        let best = delete.min(insert).min(relabel);
                        forest[x][y] = best;
                        tree_dist[i1][j1] = best;
                    } else {
                        let px = a.leftmost[i1] - li;
                        let py = b.leftmost[j1] - lj;
                        let subtree = forest[px][py] + tree_dist[i1][j1];
                        forest[x][y] = delete.min(insert).min(subtree);
                    }
                }
            }
        }
    }
    tree_dist[na - 1][nb - 1]
}

/// Applies the normalization described in the module docs to a raw cost.
pub fn normalize_cost(raw: f64, weight_a: f64, weight_b: f64) -> f64 {
    let denom = weight_a + weight_b + raw;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * raw / denom
    }
}

/// HWS distance between two trees.
pub fn hws_distance(a: &ParseTree, b: &ParseTree, cfg: &HwsConfig) -> Result<f64, HwsError> {
    cfg.validate()?;
    Ok(distance_unchecked(a, b, cfg))
}

fn distance_unchecked(a: &ParseTree, b: &ParseTree, cfg: &HwsConfig) -> f64 {
    let fa = Flat::new(a, cfg);
    let fb = Flat::new(b, cfg);
    let raw = edit_cost(&fa, &fb);
    if cfg.normalize {
        normalize_cost(raw, fa.total_weight(), fb.total_weight())
    } else {
        raw
    }
}

/// Symmetric matrix of all pairwise distances. Only the upper triangle is
/// computed; rows are filled in parallel chunks but every cell depends on
/// its own pair alone, so the result does not depend on scheduling.
pub fn pairwise_distances(trees: &[ParseTree], cfg: &HwsConfig) -> Result<Vec<Vec<f64>>, HwsError> {
    cfg.validate()?;
    if trees.is_empty() {
        return Err(HwsError::EmptyList);
    }
    let n = trees.len();
    let upper: Vec<Vec<f64>> = {
        let threads = std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
            .min(n);
        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n];
        std::thread::scope(|s| {
            for (t, chunk) in rows.chunks_mut(n.div_ceil(threads)).enumerate() {
                let start = t * n.div_ceil(threads);
                s.spawn(move || {
                    for (k, row) in chunk.iter_mut().enumerate() {
                        let i = start + k;
                        *row = ((i + 1)..n)
                            .map(|j| distance_unchecked(&trees[i], &trees[j], cfg))
                            .collect();
                    }
                });
            }
        });
        rows
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (off, &d) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    Ok(m)
}
