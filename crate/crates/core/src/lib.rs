//! Word-expert homograph disambiguation toolkit.
//!
//! The crate is organised around the pipeline stages:
//!
//! - [`dataset`]: challenge-set corpora, ambiguity categories, fold plans and few-shot samples.
//! - [`embedio`]: the `HXE1` target-token embedding format and word-piece aggregation.
//! - [`tinynn`]: a small deterministic neural kernel (MLP, BiLSTM, Adam, gradient checking).
//! - [`expert`]: per-homograph classifiers over contextual embeddings or word2vec context.
//! - [`probe`]: dot-product centroid probing.
//! - [`evalharness`]: cross-validation, few-shot rounds, F1 metrics and breakdown tables.
//! - [`mining`]: proxy-class candidate mining for rare analyses in untagged corpora.
//! - [`synthetic`]: seeded generators for Gaussian challenge sets and planted mining corpora.

pub mod dataset;
pub mod embedio;
pub mod evalharness;
pub mod expert;
pub mod mining;
pub mod probe;
pub mod synthetic;
pub mod tinynn;

pub(crate) mod binio;
pub(crate) mod rng;

pub use dataset::{Analysis, ChallengeSet, FoldPlan, LabeledSentence};
pub use embedio::{AggregationStrategy, EmbeddingRecord, EmbeddingSet};
