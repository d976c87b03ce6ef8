//! Pool-size sweeps: how close the selected demonstrations get to each
//! query as the candidate pool grows. No model calls are involved.

use reasonenv_core::{Candidate, SelectionError};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::harness::{choose_demos, parallel_map, EvalConfig};
use crate::pool::PoolView;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pool_size: usize,
    /// Mean over queries of the mean query/demonstration distance.
    pub mean_distance: f64,
    pub queries: usize,
    /// Queries whose pool was too small to select from.
    pub skipped: usize,
}

/// Demonstrations per query as `(pool index, distance)`, or why the
/// query's pool could not supply them.
pub type Selection = Result<Vec<(usize, f64)>, SelectionError>;

/// Selects for every query with the pool capped at `size` (`None` for no
/// cap). `distance(q, c)` receives indices into `queries` and the pool.
/// Selection failures stay per query; any other error aborts.
pub fn select_capped(
    queries: &[Candidate],
    view: &PoolView<'_>,
    size: Option<usize>,
    cfg: &EvalConfig,
    distance: impl Fn(usize, usize) -> Result<f64, EvalError> + Sync,
) -> Result<Vec<Selection>, EvalError> {
    let capped = EvalConfig {
        pool_size: size,
        ..cfg.clone()
    };
    let query_idx: Vec<usize> = (0..queries.len()).collect();
    parallel_map(&query_idx, cfg.workers, |&qi| {
        choose_demos(&queries[qi], view, &capped, |ci| distance(qi, ci))
    })
    .into_iter()
    .map(|r| match r {
        Ok(demos) => Ok(Ok(demos)),
        Err(EvalError::Selection(e)) => Ok(Err(e)),
        Err(e) => Err(e),
    })
    .collect()
}

impl SweepPoint {
    pub fn from_selections(pool_size: usize, selections: &[Selection]) -> Self {
        let (mut total, mut used, mut skipped) = (0.0, 0, 0);
        for r in selections {
            match r {
                Ok(demos) if !demos.is_empty() => {
                    total += demos.iter().map(|x| x.1).sum::<f64>() / demos.len() as f64;
                    used += 1;
                }
                _ => skipped += 1,
            }
        }
        SweepPoint {
            pool_size,
            mean_distance: if used == 0 { f64::NAN } else { total / used as f64 },
            queries: used,
            skipped,
        }
    }
}

/// Runs selection for every query at each pool size.
pub fn pool_size_sweep(
    queries: &[Candidate],
    pool: &[Candidate],
    sizes: &[usize],
    cfg: &EvalConfig,
    distance: impl Fn(usize, usize) -> Result<f64, EvalError> + Sync,
) -> Result<Vec<SweepPoint>, EvalError> {
    cfg.selection().validate()?;
    let view = PoolView::new(pool, cfg.seed);
    sizes
        .iter()
        .map(|&size| {
            let selections = select_capped(queries, &view, Some(size), cfg, &distance)?;
            Ok(SweepPoint::from_selections(size, &selections))
        })
        .collect()
}
