//! Rotations, MANO hand layout and retargeting, and post-grasp wrist deltas.

mod hand;
mod rotation;
mod trajectory;

use thiserror::Error;

pub use hand::{
    retarget_mano, FingerSpec, HandLayout, JointSpec, ManoPose, RobotHandPose, FINGERS,
    FINGER_NAMES, MANO_JOINTS, MANO_VALUES, ROBOT_DOF,
};
pub use rotation::{swing_twist, Rotation, Vec3, GIMBAL_LOCK_COS, UNIT_TOLERANCE};
pub use trajectory::{
    apply_deltas, extract_post_grasp, read_pose_jsonl, WristDelta, WristPose, POST_GRASP_STEPS,
};

pub(crate) use rotation::{norm, sub};

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("axis must be unit-norm (got norm {norm})")]
    NonUnitAxis { norm: f64 },
    #[error("quaternion is zero or non-finite")]
    DegenerateQuaternion,
    #[error("invalid MANO pose: {0}")]
    InvalidManoPose(String),
    #[error("invalid hand layout: {0}")]
    InvalidLayout(String),
    #[error("trajectory needs at least {needed} poses, got {got}")]
    InsufficientTrajectory { needed: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
