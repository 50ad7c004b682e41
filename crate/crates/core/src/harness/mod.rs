//! Experiment protocols over datasets: pairwise condition comparison,
//! leave-one-out attribution and the answer-context similarity baseline.

mod dataset;
mod report;
mod runner;
pub mod stats;

use thiserror::Error;

pub use dataset::{
    load_dataset, load_dataset_lenient, parse_records, AttributionRecord, LineFailure,
    PairwiseRecord, Record,
};
pub use report::{
    AttributionOutcome, AttributionReport, ExperimentReport, Failure, PairScore, PairedStats,
    REPORT_SCHEMA_VERSION,
};
pub use runner::{
    run_attribution, run_pairwise, similarity_baseline, ConSensScorer, ConditionScorer,
    RunConfig, SimilarityScorer,
};
pub use stats::{hdi, mean, roc_auc, Interval, StatsError, DEFAULT_HDI_MASS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("line {line}: invalid JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: field {field:?}: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("{0}")]
    Io(String),
    #[error("no usable examples: every example failed or the dataset is empty")]
    NoUsableExamples,
    #[error(transparent)]
    Stats(#[from] StatsError),
}
