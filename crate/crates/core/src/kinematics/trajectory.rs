use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::rotation::{add, sub, Rotation, Vec3};
use super::KinematicsError;

/// Number of post-grasp steps replayed after contact.
pub const POST_GRASP_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristPose {
    pub position: Vec3,
    pub orientation: Rotation,
}

impl WristPose {
    pub const ORIGIN: WristPose = WristPose {
        position: [0.0; 3],
        orientation: Rotation::IDENTITY,
    };
}

/// Relative transform from one wrist pose to the next, in the earlier pose's frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristDelta {
    pub translation: Vec3,
    pub rotation: Rotation,
}

impl WristDelta {
    pub const IDENTITY: WristDelta = WristDelta {
        translation: [0.0; 3],
        rotation: Rotation::IDENTITY,
    };

    pub fn between(from: &WristPose, to: &WristPose) -> Self {
        let inv = from.orientation.inverse();
        WristDelta {
            translation: inv.rotate(&sub(&to.position, &from.position)),
            rotation: inv * to.orientation,
        }
    }

    pub fn apply(&self, pose: &WristPose) -> WristPose {
        WristPose {
            position: add(&pose.position, &pose.orientation.rotate(&self.translation)),
            orientation: pose.orientation * self.rotation,
        }
    }
}

/// Deltas between adjacent poses for the first [`POST_GRASP_STEPS`] steps.
pub fn extract_post_grasp(poses: &[WristPose]) -> Result<Vec<WristDelta>, KinematicsError> {
    if poses.len() < POST_GRASP_STEPS + 1 {
        return Err(KinematicsError::InsufficientTrajectory {
            needed: POST_GRASP_STEPS + 1,
            got: poses.len(),
        });
    }
    Ok(poses[..=POST_GRASP_STEPS]
        .windows(2)
        .map(|w| WristDelta::between(&w[0], &w[1]))
        .collect())
}

/// Chains `deltas` from `start`; the result excludes `start` itself.
pub fn apply_deltas(start: &WristPose, deltas: &[WristDelta]) -> Vec<WristPose> {
    deltas
        .iter()
        .scan(*start, |pose, d| {
            *pose = d.apply(pose);
            Some(*pose)
        })
        .collect()
}

/// Reads one [`WristPose`] per non-blank line.
pub fn read_pose_jsonl<R: BufRead>(reader: R) -> Result<Vec<WristPose>, KinematicsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| KinematicsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let pose: WristPose = serde_json::from_str(&line).map_err(|e| KinematicsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if pose.position.iter().any(|x| !x.is_finite()) {
            return Err(KinematicsError::Parse {
                line: i + 1,
                message: "non-finite position".into(),
            });
        }
        out.push(pose);
    }
    Ok(out)
}
