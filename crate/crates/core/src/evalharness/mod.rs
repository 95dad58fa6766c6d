//! Experiment harness: k-fold cross-validation and few-shot rounds over word
//! experts, micro-then-macro F1 scoring, and breakdown tables.
//!
//! Per-analysis precision and recall are pooled over all folds (or rounds)
//! before F1 is taken; the homograph's score is the unweighted mean F1 over
//! every one of its analyses.

mod bucket;
mod metrics;
mod report;
mod runner;
mod trainers;

pub use bucket::{
    bucket_report, paired_masked_comparison, BucketConfig, BucketDimension, BucketRow, BucketTable,
    PairedRow,
};
pub use metrics::{
    macro_f1, macro_f1_of, micro_f1_per_analysis, AnalysisScore, ConfusionAccumulator,
};
pub use report::{
    csv_field, EvalMode, EvalReport, PredictionRecord, ScenarioInfo, REPORT_SCHEMA_VERSION,
};
pub use runner::{
    default_rounds, fewshot_round_seeds, run_cv, run_cv_detailed, run_fewshot,
    run_fewshot_detailed, FewShotMode,
};
pub use trainers::{BaselineTrainer, CentroidTrainer, ContextualTrainer, ExpertTrainer, Predictor};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::expert::ExpertError;
use crate::probe::ProbeError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
