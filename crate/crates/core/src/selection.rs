//! Demonstration selection.
//!
//! Two mechanisms are provided. `Sampled` draws demonstrations without
//! replacement with probability proportional to the reciprocal of the
//! normalized query/candidate discrepancy. `Composed` takes the `ratio`
//! share of the nearest candidates and fills the rest with candidates drawn
//! uniformly from the farthest quartile (8:2 by default).

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SelectionError;
use crate::task::Gold;
use crate::tree::ParseTree;
use crate::tuples::KnowledgeTuple;

/// A solved example that may be shown as a demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub clique_id: String,
    pub sentence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<ParseTree>,
    pub gold: Gold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Extractor output used by the content metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted: Option<Vec<KnowledgeTuple>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Sampled,
    #[default]
    Composed,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::Sampled => "sampled",
            SelectionMode::Composed => "composed",
        })
    }
}

impl FromStr for SelectionMode {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sampled" => Ok(SelectionMode::Sampled),
            "composed" => Ok(SelectionMode::Composed),
            other => Err(SelectionError::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n: usize,
    /// Share of nearest-candidate demonstrations in composed mode.
    pub ratio: f64,
    /// Added to normalized discrepancies before taking reciprocals.
    pub epsilon: f64,
    pub seed: u64,
    pub mode: SelectionMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n: 3,
            ratio: 0.8,
            epsilon: 1e-6,
            seed: 0,
            mode: SelectionMode::Composed,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.n == 0 {
            return Err(SelectionError::InvalidConfig("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(SelectionError::InvalidConfig(format!(
                "ratio must lie in [0, 1], got {}",
                self.ratio
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SelectionError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `(similar, diverse)` counts: `round_half_up(ratio * n)` and the rest.
    pub fn split(&self) -> (usize, usize) {
        let similar = ((self.ratio * self.n as f64 + 0.5).floor() as usize).min(self.n);
        (similar, self.n - similar)
    }
}

/// Sampling distribution over candidates: reciprocals of the sum-normalized
/// discrepancies, renormalized.
pub fn weights_from_discrepancies(ds: &[f64], epsilon: f64) -> Result<Vec<f64>, SelectionError> {
    if ds.is_empty() {
        return Err(SelectionError::EmptyInput);
    }
    if let Some(&bad) = ds.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(SelectionError::NegativeDiscrepancy(bad));
    }
    let total: f64 = ds.iter().sum();
    let uniform = 1.0 / ds.len() as f64;
    let inv: Vec<f64> = ds
        .iter()
        .map(|&d| {
            let normalized = if total > 0.0 { d / total } else { uniform };
            1.0 / (normalized + epsilon)
        })
        .collect();
    let z: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|w| w / z).collect())
}

/// Candidates outside the query's clique, in pool order.
pub fn exclude_query_clique<'a>(pool: &'a [Candidate], query_clique_id: &str) -> Vec<&'a Candidate> {
    pool.iter().filter(|c| c.clique_id != query_clique_id).collect()
}

/// Per-query generator seeded from the run seed and the query id, so the
/// draw for one query never depends on which other queries ran.
pub fn query_rng(seed: u64, query_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(query_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

fn check_pool(pool: usize, distances: usize, cfg: &SelectionConfig) -> Result<(), SelectionError> {
    cfg.validate()?;
    if pool != distances {
        return Err(SelectionError::LengthMismatch { pool, distances });
    }
    if pool < cfg.n {
        return Err(SelectionError::PoolTooSmall { pool, n: cfg.n });
    }
    Ok(())
}

/// Indices drawn without replacement from `weights`, in draw order.
pub fn weighted_draw<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining = weights.to_vec();
    let mut picked = Vec::with_capacity(n);
    for _ in 0..n.min(weights.len()) {
        let total: f64 = remaining.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut choice = None;
        for (i, &w) in remaining.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            choice = Some(i);
            if target < acc {
                break;
            }
        }
        let i = choice.unwrap_or_else(|| {
            // all remaining weight underflowed; take the first unpicked index
            (0..remaining.len()).find(|i| !picked.contains(i)).expect("n <= len")
        });
        remaining[i] = 0.0;
        picked.push(i);
    }
    picked
}

/// Weighted sampling without replacement; see [`weights_from_discrepancies`].
pub fn sample_indices<R: Rng + ?Sized>(
    distances: &[f64],
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<Vec<usize>, SelectionError> {
    check_pool(distances.len(), distances.len(), cfg)?;
    let weights = weights_from_discrepancies(distances, cfg.epsilon)?;
    Ok(weighted_draw(&weights, cfg.n, rng))
}

/// Nearest `similar` candidates (ties by id), then `diverse` candidates
/// drawn uniformly from the farthest quartile of the rest.
pub fn compose_indices<R: Rng + ?Sized>(
    distances: &[f64],
    ids: &[&str],
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<Vec<usize>, SelectionError> {
    check_pool(ids.len(), distances.len(), cfg)?;
    if let Some(&bad) = distances.iter().find(|d| d.is_nan()) {
        return Err(SelectionError::NegativeDiscrepancy(bad));
    }
    let (similar, diverse) = cfg.split();

    let mut ascending: Vec<usize> = (0..ids.len()).collect();
    ascending.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(ids[a].cmp(ids[b])));
    let mut picked: Vec<usize> = ascending[..similar].to_vec();

    if diverse > 0 {
        let mut rest: Vec<usize> = ascending[similar..].to_vec();
        rest.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]).then(ids[a].cmp(ids[b])));
        let quartile = ids.len().div_ceil(4).max(diverse).min(rest.len());
        let far = &rest[..quartile];
        picked.extend(index::sample(rng, far.len(), diverse).into_iter().map(|i| far[i]));
    }
    Ok(picked)
}

/// The demonstrations chosen for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub query_id: String,
    pub demo_ids: Vec<String>,
    pub mode: SelectionMode,
    pub seed: u64,
}

/// Draws demonstrations for `query_id` from an already clique-excluded pool.
pub fn sample_demonstrations<'a>(
    pool: &[&'a Candidate],
    distances: &[f64],
    cfg: &SelectionConfig,
    query_id: &str,
) -> Result<Vec<&'a Candidate>, SelectionError> {
    check_pool(pool.len(), distances.len(), cfg)?;
    let mut rng = query_rng(cfg.seed, query_id);
    Ok(sample_indices(distances, cfg, &mut rng)?
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Composed (consistency + diversity) selection for `query_id`.
pub fn compose_environment<'a>(
    pool: &[&'a Candidate],
    distances: &[f64],
    cfg: &SelectionConfig,
    query_id: &str,
) -> Result<Vec<&'a Candidate>, SelectionError> {
    let ids: Vec<&str> = pool.iter().map(|c| c.id.as_str()).collect();
    let mut rng = query_rng(cfg.seed, query_id);
    Ok(compose_indices(distances, &ids, cfg, &mut rng)?
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Dispatches on `cfg.mode`.
pub fn select<'a>(
    pool: &[&'a Candidate],
    distances: &[f64],
    cfg: &SelectionConfig,
    query_id: &str,
) -> Result<Vec<&'a Candidate>, SelectionError> {
    match cfg.mode {
        SelectionMode::Sampled => sample_demonstrations(pool, distances, cfg, query_id),
        SelectionMode::Composed => compose_environment(pool, distances, cfg, query_id),
    }
}
