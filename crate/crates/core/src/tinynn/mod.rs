//! Small deterministic neural kernel used by the word experts and the miner.
//!
//! Everything is plain `f64` arithmetic on row-major `Vec`s: an MLP with tanh
//! hidden layers, a single-layer BiLSTM encoder, softmax cross-entropy, Adam,
//! a batch-size-1 trainer, finite-difference gradient checking and a binary
//! checkpoint format.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;
mod lstm;
mod mlp;
mod param;
mod seqclf;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{grad_check, GradCheckReport, GradMismatch, FD_STEP};
pub use loss::{argmax, cross_entropy, softmax};
pub use lstm::{BiLstmEncoder, LstmCell};
pub use mlp::{MlpConfig, MlpModel};
pub use param::{Gradients, Param, Parameterized};
pub use seqclf::{BiLstmMlp, ContextSlot};
pub use train::{train, TrainStats, Trainable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at step {step} (epoch {epoch}): loss is {loss}")]
    Divergence {
        step: usize,
        epoch: usize,
        loss: f64,
    },
    #[error("label {label} out of range for {class_count} classes")]
    Label { label: usize, class_count: usize },
    #[error("gradient check failed: {} parameter(s) beyond tolerance {tolerance}; worst: {}", .report.failures, .report.describe_worst())]
    GradCheck {
        tolerance: f64,
        report: Box<GradCheckReport>,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;
