use serde::{Deserialize, Serialize};

use crate::kinematics::{HandLayout, ROBOT_DOF};

/// Length of the flattened grasp parameter vector: contact (3), wrist (3), hand (16).
pub const PARAM_DIM: usize = 3 + 3 + ROBOT_DOF;

/// Block boundaries inside the flattened vector.
pub const MU: std::ops::Range<usize> = 0..3;
pub const THETA: std::ops::Range<usize> = 3..6;
pub const POSE: std::ops::Range<usize> = 6..PARAM_DIM;

/// Grasp parameters: contact location (m), wrist Euler angles (intrinsic XYZ, rad),
/// and the 16 robot hand joint angles (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspParams {
    pub mu: [f64; 3],
    pub theta_wrist: [f64; 3],
    pub hand_pose: [f64; ROBOT_DOF],
}

impl GraspParams {
    pub const ZERO: GraspParams = GraspParams {
        mu: [0.0; 3],
        theta_wrist: [0.0; 3],
        hand_pose: [0.0; ROBOT_DOF],
    };

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        if v.len() != PARAM_DIM {
            return None;
        }
        let mut out = Self::ZERO;
        out.mu.copy_from_slice(&v[MU]);
        out.theta_wrist.copy_from_slice(&v[THETA]);
        out.hand_pose.copy_from_slice(&v[POSE]);
        Some(out)
    }

    pub fn to_array(&self) -> [f64; PARAM_DIM] {
        let mut out = [0.0; PARAM_DIM];
        out[MU].copy_from_slice(&self.mu);
        out[THETA].copy_from_slice(&self.theta_wrist);
        out[POSE].copy_from_slice(&self.hand_pose);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Elementwise sum with a flattened offset.
    pub fn offset(&self, delta: &[f64; PARAM_DIM]) -> Self {
        let mut v = self.to_array();
        v.iter_mut().zip(delta).for_each(|(a, d)| *a += d);
        Self::from_slice(&v).expect("fixed length")
    }

    pub fn difference(&self, other: &GraspParams) -> [f64; PARAM_DIM] {
        let (a, b) = (self.to_array(), other.to_array());
        std::array::from_fn(|i| a[i] - b[i])
    }

    /// Clamps the hand joints into the layout's limits.
    pub fn clamp_pose(&self, layout: &HandLayout) -> Self {
        let mut out = *self;
        for (a, [lo, hi]) in out.hand_pose.iter_mut().zip(layout.dof_limits()) {
            *a = a.clamp(lo, hi);
        }
        out
    }
}

impl Default for GraspParams {
    fn default() -> Self {
        Self::ZERO
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_layout() {
        let mut g = GraspParams::ZERO;
        g.mu[2] = 1.0;
        g.theta_wrist[0] = 2.0;
        g.hand_pose[15] = 3.0;
        let v = g.to_array();
        assert_eq!((v[2], v[3], v[21]), (1.0, 2.0, 3.0));
        assert_eq!(GraspParams::from_slice(&v), Some(g));
        assert_eq!(GraspParams::from_slice(&v[..21]), None);
    }

    #[test]
    fn clamp_respects_layout() {
        let layout = HandLayout::default_layout();
        let mut g = GraspParams::ZERO;
        g.hand_pose = [5.0; ROBOT_DOF];
        let c = g.clamp_pose(&layout);
        assert!(c
            .hand_pose
            .iter()
            .zip(layout.dof_limits())
            .all(|(a, [_, hi])| *a == hi));
    }
}
