//! Relation classifier built from first principles: forward and backward
//! passes with batch normalization, cross-entropy, Adam, training,
//! gradient checking and checkpoints.

mod adam;
mod checkpoint;
mod distribution;
mod gradcheck;
mod loss;
mod matrix;
mod model;
mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use distribution::RelationDistribution;
pub use gradcheck::{gradient_check, gradient_check_against, random_case, GradCheckReport, RELATIVE_FLOOR};
pub use loss::{softmax, softmax_cross_entropy};
pub use matrix::Matrix;
pub use model::{BatchNorm, Dense, ForwardCache, Gradients, MlpModel, Mode, ModelConfig, HIDDEN, NUM_PARAM_TENSORS};
pub use train::{predict, train, train_with_progress, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("train-mode batch normalization needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{have} training instances is fewer than one batch of {batch_size}")]
    TooFewInstances { have: usize, batch_size: usize },
    #[error("training loss became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid relation distribution: {0}")]
    InvalidDistribution(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}
