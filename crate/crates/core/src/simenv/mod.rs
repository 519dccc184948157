//! Synthetic grasp environment: hidden-optimum reward landscape, randomized
//! object placement, synthetic image features and a top-down schematic.

mod env;
mod features;
mod reward;
mod schematic;
mod task;

use std::path::PathBuf;

use thiserror::Error;

use crate::kinematics::KinematicsError;

pub use env::{canonical_instance, goal_embedding, Observation, SimEnv, DEFAULT_EMBEDDING_SCALE};
pub use features::{FeatureSynth, FEATURE_DIM, OUTCOME_DIM, SCENE_DIM};
pub use reward::{embedding_reward, rollout, trajectory_error, Outcome};
pub use schematic::{render_schematic, Rect, Schematic, FULL_CLOSURE_RAD};
pub use task::{
    make_instance, LengthScales, Task, TaskInstance, TaskSpec, TrajectoryScales, WorkspaceBox,
    TASK_IDS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error("demonstration: {0}")]
    Kinematics(#[from] KinematicsError),
}
