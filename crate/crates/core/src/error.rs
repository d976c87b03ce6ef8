use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("unbalanced brackets")]
    UnbalancedBrackets,
    #[error("empty input")]
    EmptyInput,
    #[error("open bracket without a label")]
    LabellessNode,
    #[error("leaf `{0}` has no token")]
    MissingToken(String),
    #[error("unexpected token `{0}` outside a preterminal")]
    UnexpectedToken(String),
    #[error("trailing input after the tree")]
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HwsError {
    #[error("decay must lie in (0, 1], got {0}")]
    InvalidDecay(f64),
    #[error("max_depth must be at least 1")]
    InvalidMaxDepth,
    #[error("no trees given")]
    EmptyList,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleError {
    #[error("tuple slot `{0}` is empty")]
    EmptySlot(&'static str),
    #[error("expected 2 to 5 slots, got {0}")]
    SlotCount(usize),
    #[error("no target tuple sets given")]
    EmptyTargets,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("clique has no paraphrases, the estimate divides by m = 0")]
    DegenerateClique,
    #[error("empty input")]
    EmptyInput,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sequence is constant")]
    ConstantSequence,
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("empty input")]
    EmptyInput,
    #[error("negative discrepancy {0}")]
    NegativeDiscrepancy(f64),
    #[error("pool of {pool} candidates cannot supply {n} demonstrations")]
    PoolTooSmall { pool: usize, n: usize },
    #[error("{distances} distances for a pool of {pool}")]
    LengthMismatch { pool: usize, distances: usize },
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("task `{0}` needs a label set")]
    MissingLabelSet(&'static str),
    #[error("query must contain exactly two <entity> ... </entity> spans")]
    MalformedEntityMarkers,
    #[error("demonstration `{id}` lacks a gold answer usable for task `{task}`")]
    UnusableGold { id: String, task: &'static str },
    #[error("template for `{task}` is missing placeholder `{placeholder}`")]
    MissingPlaceholder {
        task: &'static str,
        placeholder: &'static str,
    },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
}
