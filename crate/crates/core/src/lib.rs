//! Core algorithms: syntactic tree distance, tuple scoring, discrepancy
//! estimation, demonstration selection and prompt rendering.

pub mod assignment;
pub mod carb;
pub mod discrepancy;
pub mod error;
pub mod hws;
pub mod prompt;
pub mod selection;
pub mod task;
pub mod tree;
pub mod tuples;

pub use carb::{carb_score, content_discrepancy, tuple_match, TupleScore};
pub use discrepancy::{
    bin_and_aggregate, estimate_sd, pearson, spearman, Bin, BinMode, Clique, DiscrepancyAxis,
    DiscrepancyReport, SentenceDiscrepancy,
};
pub use error::{HwsError, PromptError, SelectionError, StatsError, TreeError, TupleError};
pub use hws::{hws_distance, pairwise_distances, HwsConfig};
pub use prompt::{render, Message, MessageSequence, PromptTemplate, Role};
pub use selection::{
    compose_environment, exclude_query_clique, sample_demonstrations, select,
    weights_from_discrepancies, Candidate, Selection, SelectionConfig, SelectionMode,
};
pub use task::{EventMention, Gold, Task};
pub use tree::{parse_bracketed, Node, ParseTree};
pub use tuples::{parse_tuples, render_tuples, KnowledgeTuple};
