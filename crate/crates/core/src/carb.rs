//! Token-overlap tuple scoring in the style of the CaRB scorer.
//!
//! Two tuples are compared slot by slot: the multiset intersection of
//! normalized tokens in each aligned slot counts as matched. Precision of a
//! pair is matched / predicted tokens, recall is matched / gold tokens.
//!
//! Over sets of tuples, recall uses a one-to-one assignment between gold and
//! predicted tuples that maximizes total pair F1 (ties broken toward higher
//! total recall); precision lets every prediction take its best gold match.
//! All comparisons run on exact rationals so the result does not depend on
//! summation order.

use std::collections::HashMap;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::error::TupleError;
use crate::tuples::{tokenize, KnowledgeTuple};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TupleScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TupleScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        TupleScore {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }

    pub const ZERO: TupleScore = TupleScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Token counts for one (pred, gold) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub matched: usize,
    pub pred_tokens: usize,
    pub gold_tokens: usize,
}

fn ratio(num: usize, den: usize) -> BigRational {
    if den == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Overlap {
    pub fn precision(&self) -> BigRational {
        ratio(self.matched, self.pred_tokens)
    }

    pub fn recall(&self) -> BigRational {
        ratio(self.matched, self.gold_tokens)
    }

    pub fn f1(&self) -> BigRational {
        ratio(2 * self.matched, self.pred_tokens + self.gold_tokens)
    }

    pub fn score(&self) -> TupleScore {
        TupleScore::new(to_f64(&self.precision()), to_f64(&self.recall()))
    }
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("token ratios are finite")
}

type SlotTokens = [Vec<String>; 5];

fn slot_tokens(t: &KnowledgeTuple) -> SlotTokens {
    t.slots().map(|s| s.map(tokenize).unwrap_or_default())
}

fn overlap_of(pred: &SlotTokens, gold: &SlotTokens) -> Overlap {
    let mut matched = 0;
    for (p, g) in pred.iter().zip(gold) {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in g {
            *counts.entry(tok).or_default() += 1;
        }
        for tok in p {
            if let Some(c) = counts.get_mut(tok.as_str()) {
                if *c > 0 {
                    *c -= 1;
                    matched += 1;
                }
            }
        }
    }
    Overlap {
        matched,
        pred_tokens: pred.iter().map(Vec::len).sum(),
        gold_tokens: gold.iter().map(Vec::len).sum(),
    }
}

pub fn overlap(pred: &KnowledgeTuple, gold: &KnowledgeTuple) -> Overlap {
    overlap_of(&slot_tokens(pred), &slot_tokens(gold))
}

/// Scores one predicted tuple against one gold tuple.
pub fn tuple_match(pred: &KnowledgeTuple, gold: &KnowledgeTuple) -> TupleScore {
    overlap(pred, gold).score()
}

/// (total F1, total recall), ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lex(BigRational, BigRational);

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex(self.0 - o.0, self.1 - o.1)
    }
}

impl Zero for Lex {
    fn zero() -> Self {
        Lex(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
}

/// Overlap matrix indexed `[pred][gold]`.
pub fn overlap_matrix(preds: &[KnowledgeTuple], golds: &[KnowledgeTuple]) -> Vec<Vec<Overlap>> {
    let p: Vec<SlotTokens> = preds.iter().map(slot_tokens).collect();
    let g: Vec<SlotTokens> = golds.iter().map(slot_tokens).collect();
    p.iter()
        .map(|pt| g.iter().map(|gt| overlap_of(pt, gt)).collect())
        .collect()
}

/// One-to-one assignment of golds to predictions: `result[gold] = Some(pred)`.
pub fn recall_assignment(matrix: &[Vec<Overlap>], n_golds: usize) -> Vec<Option<usize>> {
    let n_preds = matrix.len();
    if n_preds == 0 {
        return vec![None; n_golds];
    }
    // Rows are golds; columns are predictions padded with zero-score dummies.
    let cols = n_preds.max(n_golds);
    let cost: Vec<Vec<Lex>> = (0..n_golds)
        .map(|g| {
            (0..cols)
                .map(|p| match matrix.get(p) {
                    Some(row) => {
                        let o = &row[g];
                        Lex(-o.f1(), -o.recall())
                    }
                    None => Lex::zero(),
                })
                .collect()
        })
        .collect();
    min_cost_assignment(&cost)
        .into_iter()
        .map(|p| (p < n_preds).then_some(p))
        .collect()
}

/// Corpus-free score of one sentence's predictions against its gold tuples.
pub fn carb_score(preds: &[KnowledgeTuple], golds: &[KnowledgeTuple]) -> TupleScore {
    if preds.is_empty() || golds.is_empty() {
        return TupleScore::ZERO;
    }
    let matrix = overlap_matrix(preds, golds);

    let precision_sum = matrix
        .iter()
        .map(|row| row.iter().map(Overlap::precision).max().expect("golds nonempty"))
        .fold(BigRational::zero(), |acc, x| acc + x);
    let precision = precision_sum / BigRational::from_integer(BigInt::from(preds.len()));

    let recall_sum = recall_assignment(&matrix, golds.len())
        .iter()
        .enumerate()
        .filter_map(|(g, p)| p.map(|p| matrix[p][g].recall()))
        .fold(BigRational::zero(), |acc, x| acc + x);
    let recall = recall_sum / BigRational::from_integer(BigInt::from(golds.len()));

    TupleScore::new(to_f64(&precision), to_f64(&recall))
}

/// `1 - mean F1` of the source tuples scored against each target set.
/// Zero means identical content.
pub fn content_discrepancy(
    source: &[KnowledgeTuple],
    targets: &[Vec<KnowledgeTuple>],
) -> Result<f64, TupleError> {
    if targets.is_empty() {
        return Err(TupleError::EmptyTargets);
    }
    let total: f64 = targets.iter().map(|t| carb_score(source, t).f1).sum();
    Ok((1.0 - total / targets.len() as f64).clamp(0.0, 1.0))
}
