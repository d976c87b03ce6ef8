//! Query/candidate distance used for selection.

use std::fmt;
use std::str::FromStr;

use reasonenv_core::{carb_score, hws_distance, Candidate, HwsConfig};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Syntactic distance between parse trees.
    #[default]
    Hws,
    /// `1 - F1` between extracted tuple sets.
    Content,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Hws => "hws",
            MetricKind::Content => "content",
        })
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hws" => Ok(MetricKind::Hws),
            "content" => Ok(MetricKind::Content),
            other => Err(format!("unknown metric `{other}` (expected hws or content)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    #[serde(default)]
    pub hws: HwsConfig,
}

impl Metric {
    pub fn hws() -> Self {
        Metric::default()
    }

    pub fn content() -> Self {
        Metric {
            kind: MetricKind::Content,
            hws: HwsConfig::default(),
        }
    }

    /// Checks up front that every item carries what the metric reads.
    pub fn check<'a>(&self, items: impl IntoIterator<Item = &'a Candidate>) -> Result<(), EvalError> {
        for c in items {
            match self.kind {
                MetricKind::Hws if c.tree.is_none() => return Err(EvalError::MissingTree(c.id.clone())),
                MetricKind::Content if c.extracted.is_none() => {
                    return Err(EvalError::MissingExtraction(c.id.clone()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: &Candidate, b: &Candidate) -> Result<f64, EvalError> {
        match self.kind {
            MetricKind::Hws => {
                let ta = a.tree.as_ref().ok_or_else(|| EvalError::MissingTree(a.id.clone()))?;
                let tb = b.tree.as_ref().ok_or_else(|| EvalError::MissingTree(b.id.clone()))?;
                Ok(hws_distance(ta, tb, &self.hws)?)
            }
            MetricKind::Content => {
                let xa = a.extracted.as_ref().ok_or_else(|| EvalError::MissingExtraction(a.id.clone()))?;
                let xb = b.extracted.as_ref().ok_or_else(|| EvalError::MissingExtraction(b.id.clone()))?;
                Ok(1.0 - carb_score(xa, xb).f1)
            }
        }
    }

    pub fn distances(&self, query: &Candidate, pool: &[&Candidate]) -> Result<Vec<f64>, EvalError> {
        pool.iter().map(|c| self.distance(query, c)).collect()
    }
}
