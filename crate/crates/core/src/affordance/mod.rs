//! The affordance prior: contact estimation from contact points and heatmaps,
//! the grasp loss, a small trainable head, and prior sources for fine-tuning.

mod camera;
mod gmm;
mod head;
mod heatmap;
mod loss;
mod params;
mod prior;

use std::path::PathBuf;

use thiserror::Error;

pub use camera::{deproject, CameraIntrinsics};
pub use gmm::{fit_gmm, ContactSet, Frame, GmmComponent, GmmFit, GmmModel, VARIANCE_FLOOR};
pub use head::{dataset_loss, train_toy_head, HeadTrainConfig, ToyAffordanceHead, TrainedHead};
pub use heatmap::{softargmax_unchecked, spatial_softargmax, GridMapping, Heatmap};
pub use loss::{grasp_loss, LossWeights};
pub use params::{GraspParams, MU, PARAM_DIM, POSE, THETA};
pub use prior::{PriorSource, PriorTable};

#[derive(Debug, Error)]
pub enum AffordanceError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("{points} points cannot support {k} mixture components")]
    InsufficientPoints { points: usize, k: usize },
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no prior entry for observation {0:?}")]
    MissingPrior(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
