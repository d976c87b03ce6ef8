//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use reasonenv_core::prompt::InstructionPlacement;
use reasonenv_core::{BinMode, DiscrepancyAxis, HwsConfig, SelectionMode, Task};
use reasonenv_eval::{EstimateConfig, EvalConfig, Metric, MetricKind};
use reasonenv_gateway::GatewayConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bad or missing settings. Maps to exit code 1.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Queries for `select` and `run`.
    pub dataset: Option<PathBuf>,
    /// Demonstration candidates; defaults to the dataset.
    pub pool: Option<PathBuf>,
    /// Paraphrase cliques for `estimate`.
    pub cliques: Option<PathBuf>,
    /// JSONL `{sentence, tree}` lookup for sentences without trees.
    pub trees: Option<PathBuf>,
    /// Shell command turning sentences (one per line) into bracketed trees.
    pub parser: Option<String>,
    /// Directory of `<task>.toml` prompt templates.
    pub templates: Option<PathBuf>,
    /// Stored records for `score`; defaults to `<out>/records.jsonl`.
    pub records: Option<PathBuf>,
    /// `(d, p)` table for `correlate`; defaults to `<out>/estimate.csv`.
    pub csv: Option<PathBuf>,
    pub metric: MetricKind,
    pub decay: f64,
    pub n_shots: usize,
    /// Candidate pool caps. Empty means the whole pool; several values
    /// make a sweep over nested subsets of one shuffled pool.
    pub pool_size: Vec<usize>,
    pub mode: SelectionMode,
    pub ratio: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Evaluate a seeded subset of this many queries.
    pub sample: Option<usize>,
    pub include_no_relation: bool,
    pub placement: InstructionPlacement,
    pub bins: usize,
    pub bin_mode: BinMode,
    pub axis: DiscrepancyAxis,
    /// `http(s)://...`, `mock:<rule>`, or `mock:oracle` (gold answers of
    /// the dataset, for `run` only).
    pub endpoint: String,
    pub model: String,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        let est = EstimateConfig::default();
        let gw = GatewayConfig::default();
        RunConfig {
            task: Task::Oie,
            dataset: None,
            pool: None,
            cliques: None,
            trees: None,
            parser: None,
            templates: None,
            records: None,
            csv: None,
            metric: MetricKind::Hws,
            decay: HwsConfig::default().decay,
            n_shots: eval.n_shots,
            pool_size: Vec::new(),
            mode: eval.mode,
            ratio: eval.ratio,
            epsilon: eval.epsilon,
            seed: eval.seed,
            sample: None,
            include_no_relation: eval.include_no_relation,
            placement: eval.placement,
            bins: est.bins,
            bin_mode: est.bin_mode,
            axis: est.axis,
            endpoint: gw.endpoint,
            model: gw.model,
            max_in_flight: gw.max_in_flight,
            timeout_secs: gw.timeout_secs,
            cache: None,
            out: PathBuf::from("out"),
            workers: eval.workers,
        }
    }
}

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_task(s: &str) -> Result<Task, String> {
    match Task::from_str(s) {
        Ok(t) if t.is_extraction() => Ok(t),
        Ok(t) => Err(format!("`{t}` is a generation task; expected oie, re or ee")),
        Err(e) => Err(e.to_string()),
    }
}

/// Flags shared by every subcommand. Anything given here overrides the
/// config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with any of the settings below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// oie, re or ee.
    #[arg(long, value_parser = parse_task)]
    pub task: Option<Task>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub cliques: Option<PathBuf>,
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long)]
    pub parser: Option<String>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// hws or content.
    #[arg(long)]
    pub metric: Option<MetricKind>,
    #[arg(long)]
    pub decay: Option<f64>,
    /// Demonstrations per query.
    #[arg(long = "n")]
    pub n_shots: Option<usize>,
    /// Comma-separated pool caps, e.g. 50,200,1272.
    #[arg(long, value_delimiter = ',')]
    pub pool_size: Option<Vec<usize>>,
    /// sampled or composed.
    #[arg(long)]
    pub mode: Option<SelectionMode>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub include_no_relation: bool,
    /// system or first_user.
    #[arg(long, value_parser = serde_enum::<InstructionPlacement>)]
    pub placement: Option<InstructionPlacement>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// equal_width or quantile.
    #[arg(long, value_parser = serde_enum::<BinMode>)]
    pub bin_mode: Option<BinMode>,
    /// original or clique_mean.
    #[arg(long, value_parser = serde_enum::<DiscrepancyAxis>)]
    pub axis: Option<DiscrepancyAxis>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $flags:ident, $($field:ident),*) => {
        $(if let Some(v) = $flags.$field.clone() { $cfg.$field = v; })*
    };
    (opt $cfg:ident, $flags:ident, $($field:ident),*) => {
        $(if $flags.$field.is_some() { $cfg.$field = $flags.$field.clone(); })*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))?;
        Ok(Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?)
    }

    /// Defaults, then the `--config` file, then the flags.
    pub fn resolve(flags: &Flags) -> anyhow::Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        apply!(cfg, flags, task, metric, decay, n_shots, pool_size, mode, ratio, epsilon, seed, placement, bins, bin_mode, axis);
        apply!(cfg, flags, endpoint, model, max_in_flight, timeout_secs, out, workers);
        apply!(opt cfg, flags, dataset, pool, cliques, trees, parser, templates, records, csv, sample, cache);
        if flags.include_no_relation {
            cfg.include_no_relation = true;
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !self.task.is_extraction() {
            return Err(ConfigError(format!("task `{}` cannot be evaluated; expected oie, re or ee", self.task)));
        }
        if self.pool_size.contains(&0) {
            return Err(ConfigError("pool sizes must be positive".into()));
        }
        if self.workers == 0 || self.max_in_flight == 0 {
            return Err(ConfigError("workers and max_in_flight must be positive".into()));
        }
        self.hws().validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn hws(&self) -> HwsConfig {
        HwsConfig {
            decay: self.decay,
            ..HwsConfig::default()
        }
    }

    pub fn metric(&self) -> Metric {
        Metric {
            kind: self.metric,
            hws: self.hws(),
        }
    }

    /// Pool caps to run, `None` standing for the whole pool.
    pub fn pool_caps(&self) -> Vec<Option<usize>> {
        if self.pool_size.is_empty() {
            vec![None]
        } else {
            self.pool_size.iter().map(|&s| Some(s)).collect()
        }
    }

    pub fn eval(&self, pool_size: Option<usize>) -> EvalConfig {
        EvalConfig {
            task: self.task,
            n_shots: self.n_shots,
            pool_size,
            mode: self.mode,
            ratio: self.ratio,
            epsilon: self.epsilon,
            seed: self.seed,
            metric: self.metric(),
            include_no_relation: self.include_no_relation,
            placement: self.placement,
            workers: self.workers,
        }
    }

    pub fn estimate(&self) -> EstimateConfig {
        EstimateConfig {
            task: self.task,
            metric: self.metric(),
            bins: self.bins,
            bin_mode: self.bin_mode,
            axis: self.axis,
            placement: self.placement,
            workers: self.workers,
        }
    }

    pub fn gateway(&self) -> GatewayConfig {
        GatewayConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            max_in_flight: self.max_in_flight,
            timeout_secs: self.timeout_secs,
        }
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, ConfigError> {
        value
            .as_deref()
            .ok_or_else(|| ConfigError(format!("no {what} given (set --{what} or `{what}` in the config file)")))
    }
}
