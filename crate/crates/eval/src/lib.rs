//! Running demonstration selection end to end: task harnesses for OIE, RE
//! and EE, discrepancy estimation over paraphrase cliques, and pool-size
//! sweeps.

pub mod dataset;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod metric;
pub mod pool;
pub mod scoring;
pub mod sweep;

pub use dataset::{load_candidates, load_cliques, read_jsonl, subsample, to_jsonl, write_atomic};
pub use error::EvalError;
pub use estimate::{CliqueEstimate, EstimateConfig, Estimator, TreeSource};
pub use harness::{aggregate, summarize, EvalConfig, EvalSummary, Harness, RunRecord};
pub use metric::{Metric, MetricKind};
pub use pool::PoolView;
pub use scoring::{map_label, micro_f1, score_response, Counts};
pub use sweep::{pool_size_sweep, select_capped, Selection, SweepPoint};
