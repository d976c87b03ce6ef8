//! Clique-based discrepancy estimation and the discrepancy/performance
//! statistics built on top of it.
//!
//! For a source clique `(x^0, ..., x^m)` and the model's paraphrases of it
//! `(x'^0, ..., x'^m)`, the discrepancy of member `j` is
//!
//! ```text
//! d(x^j) = 1/m * sum_{l != j} f(x^j, x'^l)
//! ```
//!
//! for any pairwise metric `f`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::task::Gold;
use crate::tree::ParseTree;

/// A sentence and its paraphrases sharing one meaning. Index 0 is the
/// original sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clique {
    pub id: String,
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Gold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<ParseTree>>,
}

impl Clique {
    /// Number of paraphrases, `m`.
    pub fn paraphrases(&self) -> usize {
        self.sentences.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.sentences.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        if let Some(trees) = &self.trees {
            if trees.len() != self.sentences.len() {
                return Err(StatsError::LengthMismatch(self.sentences.len(), trees.len()));
            }
        }
        Ok(())
    }
}

/// Per-member discrepancy of a source clique against its target clique.
pub fn estimate_sd<T, F>(source: &[T], target: &[T], metric: F) -> Result<Vec<f64>, StatsError>
where
    F: Fn(&T, &T) -> f64,
{
    if source.len() != target.len() {
        return Err(StatsError::LengthMismatch(source.len(), target.len()));
    }
    if source.len() < 2 {
        return Err(StatsError::DegenerateClique);
    }
    let m = (source.len() - 1) as f64;
    Ok(source
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let sum: f64 = target
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != j)
                .map(|(_, y)| metric(x, y))
                .sum();
            sum / m
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    #[default]
    EqualWidth,
    Quantile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    /// `None` for empty bins.
    pub mean_d: Option<f64>,
    pub mean_p: Option<f64>,
    pub count: usize,
}

fn check_finite(pairs: &[(f64, f64)]) -> Result<(), StatsError> {
    for &(d, p) in pairs {
        for v in [d, p] {
            if !v.is_finite() {
                return Err(StatsError::NonFinite(v));
            }
        }
    }
    Ok(())
}

/// Bin index of every pair.
fn assign_bins(pairs: &[(f64, f64)], k: usize, mode: BinMode) -> (Vec<usize>, f64, f64) {
    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let idx = match mode {
        BinMode::EqualWidth => pairs
            .iter()
            .map(|&(d, _)| {
                if hi == lo {
                    0
                } else {
                    (((d - lo) * k as f64 / (hi - lo)).floor() as usize).min(k - 1)
                }
            })
            .collect(),
        BinMode::Quantile => {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0).then(a.cmp(&b)));
            let mut idx = vec![0; pairs.len()];
            for (rank, &i) in order.iter().enumerate() {
                idx[i] = rank * k / pairs.len();
            }
            idx
        }
    };
    (idx, lo, hi)
}

/// Groups `(d, p)` pairs into `k` intervals over the observed range of `d`
/// and reports per-interval means. Empty intervals are kept.
pub fn bin_and_aggregate(pairs: &[(f64, f64)], k: usize, mode: BinMode) -> Result<Vec<Bin>, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if k == 0 {
        return Err(StatsError::ZeroBins);
    }
    check_finite(pairs)?;
    let (idx, lo, hi) = assign_bins(pairs, k, mode);

    let mut sums = vec![(0.0, 0.0, 0usize); k];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); k];
    for (&(d, p), &b) in pairs.iter().zip(&idx) {
        sums[b].0 += d;
        sums[b].1 += p;
        sums[b].2 += 1;
        ranges[b].0 = ranges[b].0.min(d);
        ranges[b].1 = ranges[b].1.max(d);
    }

    let width = (hi - lo) / k as f64;
    let mut last_hi = lo;
    Ok((0..k)
        .map(|b| {
            let (sd, sp, count) = sums[b];
            let (bl, bh) = match mode {
                BinMode::EqualWidth if hi > lo => (
                    lo + width * b as f64,
                    if b + 1 == k { hi } else { lo + width * (b + 1) as f64 },
                ),
                BinMode::EqualWidth => (lo, hi),
                BinMode::Quantile if count > 0 => ranges[b],
                BinMode::Quantile => (last_hi, last_hi),
            };
            last_hi = bh;
            Bin {
                lo: bl,
                hi: bh,
                mean_d: (count > 0).then(|| sd / count as f64),
                mean_p: (count > 0).then(|| sp / count as f64),
                count,
            }
        })
        .collect())
}

fn check_pair_lengths(xs: &[f64], ys: &[f64]) -> Result<(), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewSamples(xs.len()));
    }
    for &v in xs.iter().chain(ys) {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(v));
        }
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pair_lengths(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSequence);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Average ranks, 1-based; ties share the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson over average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pair_lengths(xs, ys)?;
    pearson(&ranks(xs), &ranks(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceDiscrepancy {
    pub clique_id: String,
    pub index: usize,
    pub d: f64,
    #[serde(default)]
    pub p: Option<f64>,
}

/// Which discrepancy value is paired with a clique's performance score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyAxis {
    /// `d` of the original sentence.
    #[default]
    Original,
    /// Mean `d` over all clique members.
    CliqueMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub per_sentence: Vec<SentenceDiscrepancy>,
    pub axis: DiscrepancyAxis,
    pub bin_mode: BinMode,
    pub bins: Vec<Bin>,
    pub pearson_r: Option<f64>,
}

impl DiscrepancyReport {
    /// The `(d, p)` pairs the report aggregates, ordered by clique id.
    pub fn pairs(per_sentence: &[SentenceDiscrepancy], axis: DiscrepancyAxis) -> Vec<(f64, f64)> {
        let mut by_clique: BTreeMap<&str, (f64, usize, Option<f64>)> = BTreeMap::new();
        for s in per_sentence {
            let e = by_clique.entry(&s.clique_id).or_insert((0.0, 0, None));
            match axis {
                DiscrepancyAxis::Original if s.index == 0 => e.0 = s.d,
                DiscrepancyAxis::Original => {}
                DiscrepancyAxis::CliqueMean => e.0 += s.d,
            }
            e.1 += 1;
            if s.index == 0 {
                e.2 = s.p;
            }
        }
        by_clique
            .into_values()
            .filter_map(|(d, n, p)| {
                let d = match axis {
                    DiscrepancyAxis::Original => d,
                    DiscrepancyAxis::CliqueMean => d / n as f64,
                };
                p.map(|p| (d, p))
            })
            .collect()
    }

    pub fn build(
        per_sentence: Vec<SentenceDiscrepancy>,
        k: usize,
        bin_mode: BinMode,
        axis: DiscrepancyAxis,
    ) -> Result<Self, StatsError> {
        let pairs = Self::pairs(&per_sentence, axis);
        let bins = if pairs.is_empty() {
            Vec::new()
        } else {
            bin_and_aggregate(&pairs, k, bin_mode)?
        };
        let (ds, ps): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        Ok(DiscrepancyReport {
            per_sentence,
            axis,
            bin_mode,
            bins,
            pearson_r: pearson(&ds, &ps).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_identity_is_zero() {
        // A model that reproduces the clique verbatim, metric zero on equal items.
        let s = vec!["x"; 3];
        let d = estimate_sd(&s, &s, |a, b| if a == b { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn estimate_mean_of_given_values() {
        // m = 2: source[0] vs target[1], target[2] -> 0.2 and 0.4
        let source = [0usize, 1, 2];
        let table = [[9.0, 0.2, 0.4], [0.0; 3], [0.0; 3]];
        let d = estimate_sd(&source, &source, |a, b| table[*a][*b]).unwrap();
        assert!((d[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn estimate_errors() {
        let m = |_: &f64, _: &f64| 1.0;
        assert_eq!(estimate_sd(&[1.0], &[1.0], m), Err(StatsError::DegenerateClique));
        assert_eq!(estimate_sd(&[1.0, 2.0], &[1.0], m), Err(StatsError::LengthMismatch(2, 1)));
    }

    #[test]
    fn collapsed_range_single_bin() {
        let pairs = vec![(0.3, 1.0), (0.3, 0.0), (0.3, 0.5)];
        let bins = bin_and_aggregate(&pairs, 5, BinMode::EqualWidth).unwrap();
        assert_eq!(bins.len(), 5);
        assert_eq!(bins[0].count, 3);
        assert_eq!(bins[0].mean_p, Some(0.5));
        assert!(bins[1..].iter().all(|b| b.count == 0 && b.mean_d.is_none()));
    }

    #[test]
    fn uniform_grid_boundaries() {
        let pairs: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, 1.0)).collect();
        let bins = bin_and_aggregate(&pairs, 5, BinMode::EqualWidth).unwrap();
        for (b, bin) in bins.iter().enumerate() {
            assert!((bin.lo - 0.2 * b as f64).abs() < 1e-12);
            assert!((bin.hi - 0.2 * (b + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 11);
        // the maximum lands in the closed rightmost bin
        assert_eq!(bins[4].count, 3);
    }

    #[test]
    fn quantile_bins_balance_counts() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| ((i * i) as f64, i as f64)).collect();
        let bins = bin_and_aggregate(&pairs, 5, BinMode::Quantile).unwrap();
        assert!(bins.iter().all(|b| b.count == 2));
        let few = bin_and_aggregate(&pairs[..2], 5, BinMode::Quantile).unwrap();
        assert_eq!(few.iter().map(|b| b.count).sum::<usize>(), 2);
    }

    #[test]
    fn binning_errors() {
        assert_eq!(bin_and_aggregate(&[], 5, BinMode::EqualWidth), Err(StatsError::EmptyInput));
        assert_eq!(bin_and_aggregate(&[(0.0, 0.0)], 0, BinMode::EqualWidth), Err(StatsError::ZeroBins));
        assert!(matches!(
            bin_and_aggregate(&[(f64::NAN, 0.0)], 2, BinMode::EqualWidth),
            Err(StatsError::NonFinite(_))
        ));
    }

    #[test]
    fn pearson_cases() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(StatsError::TooFewSamples(1)));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::ConstantSequence));
    }

    #[test]
    fn spearman_ties_and_order() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[0.9, 0.5, 0.4, 0.1]).unwrap(), -1.0);
    }

    #[test]
    fn report_axes() {
        let entry = |c: &str, i, d, p| SentenceDiscrepancy {
            clique_id: c.into(),
            index: i,
            d,
            p,
        };
        let rows = vec![
            entry("a", 0, 0.1, Some(0.9)),
            entry("a", 1, 0.3, None),
            entry("b", 0, 0.5, Some(0.2)),
            entry("b", 1, 0.7, None),
        ];
        assert_eq!(
            DiscrepancyReport::pairs(&rows, DiscrepancyAxis::Original),
            vec![(0.1, 0.9), (0.5, 0.2)]
        );
        let mean = DiscrepancyReport::pairs(&rows, DiscrepancyAxis::CliqueMean);
        assert!((mean[0].0 - 0.2).abs() < 1e-15 && (mean[1].0 - 0.6).abs() < 1e-15);
        let report = DiscrepancyReport::build(rows, 5, BinMode::EqualWidth, DiscrepancyAxis::Original).unwrap();
        assert_eq!(report.pearson_r, Some(-1.0));
        assert_eq!(report.bins.iter().map(|b| b.count).sum::<usize>(), 2);
    }
}
