//! MANO-to-robot hand retargeting.
//!
//! Each MANO finger joint is an axis-angle rotation in its parent frame. The
//! layout names three anatomical axes per joint. Retargeting removes the twist
//! about the finger's long axis with a swing-twist split, then reads bend and
//! spread as the projections of the remaining swing's rotation vector onto the
//! layout's bend and spread axes. That read-out is the exact inverse of
//! [`HandLayout::compose_mano`], which builds each joint rotation from the
//! rotation vector `bend * bend_axis + spread * spread_axis`.

use std::f64::consts::PI;

use log::debug;
use serde::{Deserialize, Serialize};

use super::rotation::{add, check_unit, dot, norm, scale, swing_twist, Rotation, Vec3};
use super::KinematicsError;

pub const MANO_JOINTS: usize = 15;
pub const MANO_VALUES: usize = MANO_JOINTS * 3;
pub const FINGERS: usize = 4;
pub const ROBOT_DOF: usize = 16;

/// Finger order used throughout: thumb, index, middle, ring.
pub const FINGER_NAMES: [&str; FINGERS] = ["thumb", "index", "middle", "ring"];

const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

/// Human hand pose: wrist axis-angle plus 15 joint axis-angles, flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManoPose {
    pub wrist_rot: Vec3,
    joint_rots: Vec<f64>,
}

impl ManoPose {
    pub fn new(wrist_rot: Vec3, joint_rots: Vec<f64>) -> Result<Self, KinematicsError> {
        let pose = ManoPose {
            wrist_rot,
            joint_rots,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn zeros() -> Self {
        ManoPose {
            wrist_rot: [0.0; 3],
            joint_rots: vec![0.0; MANO_VALUES],
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.joint_rots.len() != MANO_VALUES {
            return Err(KinematicsError::InvalidManoPose(format!(
                "expected {MANO_VALUES} joint values, got {}",
                self.joint_rots.len()
            )));
        }
        let vectors =
            std::iter::once(self.wrist_rot).chain((0..MANO_JOINTS).map(|j| self.joint(j)));
        for (i, v) in vectors.enumerate() {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(KinematicsError::InvalidManoPose(format!(
                    "non-finite rotation {i}"
                )));
            }
            if norm(&v) >= PI {
                return Err(KinematicsError::InvalidManoPose(format!(
                    "axis-angle {i} has magnitude {} >= pi",
                    norm(&v)
                )));
            }
        }
        Ok(())
    }

    pub fn joint(&self, j: usize) -> Vec3 {
        [
            self.joint_rots[3 * j],
            self.joint_rots[3 * j + 1],
            self.joint_rots[3 * j + 2],
        ]
    }

    pub fn set_joint(&mut self, j: usize, v: Vec3) {
        self.joint_rots[3 * j..3 * j + 3].copy_from_slice(&v);
    }

    pub fn joint_values(&self) -> &[f64] {
        &self.joint_rots
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    /// Index of this joint in the MANO joint list.
    pub mano_joint: usize,
    pub bend_axis: Vec3,
    pub spread_axis: Vec3,
    pub twist_axis: Vec3,
    pub bend_limits: [f64; 2],
    /// Only the MCP joint actuates spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_limits: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSpec {
    pub name: String,
    pub mcp: JointSpec,
    pub pip: JointSpec,
    pub dip: JointSpec,
    /// DIP = coupling_ratio * PIP.
    #[serde(default = "default_coupling")]
    pub coupling_ratio: f64,
}

fn default_coupling() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandLayout {
    pub fingers: Vec<FingerSpec>,
}

const DEFAULT_LAYOUT_JSON: &str = include_str!("../../data/hand_layout.json");

impl HandLayout {
    /// The layout shipped with the crate (`data/hand_layout.json`).
    pub fn default_layout() -> Self {
        Self::from_json(DEFAULT_LAYOUT_JSON).expect("bundled hand layout is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, KinematicsError> {
        let layout: HandLayout = serde_json::from_str(text)
            .map_err(|e| KinematicsError::InvalidLayout(e.to_string()))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |msg: String| Err(KinematicsError::InvalidLayout(msg));
        if self.fingers.len() != FINGERS {
            return bad(format!(
                "expected {FINGERS} fingers, got {}",
                self.fingers.len()
            ));
        }
        let mut seen = [false; MANO_JOINTS];
        for (f, finger) in self.fingers.iter().enumerate() {
            if finger.name != FINGER_NAMES[f] {
                return bad(format!(
                    "finger {f} must be {}, got {}",
                    FINGER_NAMES[f], finger.name
                ));
            }
            if !(finger.coupling_ratio.is_finite() && finger.coupling_ratio > 0.0) {
                return bad(format!("{}: coupling ratio must be positive", finger.name));
            }
            for (label, joint) in [
                ("mcp", &finger.mcp),
                ("pip", &finger.pip),
                ("dip", &finger.dip),
            ] {
                let at = format!("{}.{label}", finger.name);
                if joint.mano_joint >= MANO_JOINTS || seen[joint.mano_joint] {
                    return bad(format!(
                        "{at}: MANO joint {} out of range or reused",
                        joint.mano_joint
                    ));
                }
                seen[joint.mano_joint] = true;
                let axes = [joint.bend_axis, joint.spread_axis, joint.twist_axis];
                for a in &axes {
                    if check_unit(a).is_err() {
                        return bad(format!("{at}: axis {a:?} is not unit-norm"));
                    }
                }
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    if dot(&axes[i], &axes[j]).abs() > ORTHOGONALITY_TOLERANCE {
                        return bad(format!("{at}: axes are not mutually orthogonal"));
                    }
                }
                let mut limits = vec![joint.bend_limits];
                limits.extend(joint.spread_limits);
                if limits.iter().any(|[lo, hi]| !(lo < hi)) {
                    return bad(format!("{at}: joint limits need lo < hi"));
                }
            }
            if finger.mcp.spread_limits.is_none() {
                return bad(format!("{}.mcp: spread limits are required", finger.name));
            }
            let [lo, hi] = finger.pip_range();
            if !(lo < hi) {
                return bad(format!(
                    "{}: coupled DIP limits leave no admissible PIP range",
                    finger.name
                ));
            }
        }
        Ok(())
    }

    /// Per-DOF `[lo, hi]` in [`RobotHandPose`] order.
    pub fn dof_limits(&self) -> [[f64; 2]; ROBOT_DOF] {
        let mut out = [[0.0; 2]; ROBOT_DOF];
        for (f, finger) in self.fingers.iter().enumerate() {
            out[4 * f] = finger.mcp.spread_limits.unwrap_or([0.0, 0.0]);
            out[4 * f + 1] = finger.mcp.bend_limits;
            out[4 * f + 2] = finger.pip.bend_limits;
            out[4 * f + 3] = finger.dip.bend_limits;
        }
        out
    }

    /// Builds the MANO pose whose joints are the pure bend/spread rotations
    /// described by `pose`. Inverse of [`retarget_mano`] inside the limits.
    pub fn compose_mano(&self, pose: &RobotHandPose) -> Result<ManoPose, KinematicsError> {
        let mut mano = ManoPose::zeros();
        for (f, finger) in self.fingers.iter().enumerate() {
            let [spread, mcp_bend, pip, dip] = pose.finger(f);
            let j = &finger.mcp;
            mano.set_joint(
                j.mano_joint,
                add(
                    &scale(&j.bend_axis, mcp_bend),
                    &scale(&j.spread_axis, spread),
                ),
            );
            mano.set_joint(finger.pip.mano_joint, scale(&finger.pip.bend_axis, pip));
            mano.set_joint(finger.dip.mano_joint, scale(&finger.dip.bend_axis, dip));
        }
        mano.validate()?;
        Ok(mano)
    }

    /// Joint angles at the midpoint of each bend range with spread at zero
    /// (clamped into range); the "half-closed" hand.
    pub fn half_closed(&self) -> RobotHandPose {
        let mut angles = [0.0; ROBOT_DOF];
        for (f, finger) in self.fingers.iter().enumerate() {
            let [slo, shi] = finger.mcp.spread_limits.unwrap_or([0.0, 0.0]);
            angles[4 * f] = 0.0_f64.clamp(slo, shi);
            let [lo, hi] = finger.mcp.bend_limits;
            angles[4 * f + 1] = 0.5 * (lo + hi);
            let [plo, phi] = finger.pip_range();
            let pip = 0.5 * (plo + phi);
            angles[4 * f + 2] = pip;
            angles[4 * f + 3] = finger.coupling_ratio * pip;
        }
        RobotHandPose {
            joint_angles: angles,
        }
    }
}

impl FingerSpec {
    /// PIP range such that the coupled DIP angle also stays inside its limits.
    pub fn pip_range(&self) -> [f64; 2] {
        let [plo, phi] = self.pip.bend_limits;
        let [dlo, dhi] = self.dip.bend_limits;
        let r = self.coupling_ratio;
        [plo.max(dlo / r), phi.min(dhi / r)]
    }
}

/// 16 joint angles, ordered `[finger][MCP-spread, MCP-bend, PIP-bend, DIP-bend]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotHandPose {
    pub joint_angles: [f64; ROBOT_DOF],
}

impl RobotHandPose {
    pub fn zeros() -> Self {
        RobotHandPose {
            joint_angles: [0.0; ROBOT_DOF],
        }
    }

    pub fn finger(&self, f: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        out.copy_from_slice(&self.joint_angles[4 * f..4 * f + 4]);
        out
    }

    pub fn within_limits(&self, layout: &HandLayout) -> bool {
        self.joint_angles
            .iter()
            .zip(layout.dof_limits())
            .all(|(a, [lo, hi])| *a >= lo && *a <= hi)
    }
}

/// Bend and spread of a joint rotation, after discarding twist.
fn bend_spread(rotvec: &Vec3, joint: &JointSpec) -> Result<(f64, f64, f64), KinematicsError> {
    let r = Rotation::from_rotation_vector(rotvec);
    let (twist, swing) = swing_twist(&r, &joint.twist_axis)?;
    let v = swing.to_rotation_vector();
    Ok((
        dot(&v, &joint.bend_axis),
        dot(&v, &joint.spread_axis),
        twist,
    ))
}

fn clamp_logged(value: f64, [lo, hi]: [f64; 2], what: &str) -> f64 {
    let out = value.clamp(lo, hi);
    if out != value {
        debug!("retarget: {what} {value:.4} clamped to {out:.4}");
    }
    out
}

/// Maps a MANO pose onto the 16-DOF robot hand.
pub fn retarget_mano(
    mano: &ManoPose,
    layout: &HandLayout,
) -> Result<RobotHandPose, KinematicsError> {
    mano.validate()?;
    layout.validate()?;
    let mut angles = [0.0; ROBOT_DOF];
    for (f, finger) in layout.fingers.iter().enumerate() {
        let name = &finger.name;
        let (mcp_bend, spread, twist) =
            bend_spread(&mano.joint(finger.mcp.mano_joint), &finger.mcp)?;
        let (pip_bend, pip_side, pip_twist) =
            bend_spread(&mano.joint(finger.pip.mano_joint), &finger.pip)?;
        let (dip_bend, _, dip_twist) =
            bend_spread(&mano.joint(finger.dip.mano_joint), &finger.dip)?;
        debug!(
            "retarget {name}: discarded twist mcp={twist:.4} pip={pip_twist:.4} dip={dip_twist:.4}, \
             pip side motion {pip_side:.4}, human dip bend {dip_bend:.4}"
        );

        let spread_limits = finger.mcp.spread_limits.expect("validated layout");
        angles[4 * f] = clamp_logged(spread, spread_limits, &format!("{name} MCP spread"));
        angles[4 * f + 1] = clamp_logged(
            mcp_bend,
            finger.mcp.bend_limits,
            &format!("{name} MCP bend"),
        );
        let pip = clamp_logged(pip_bend, finger.pip_range(), &format!("{name} PIP bend"));
        angles[4 * f + 2] = pip;
        angles[4 * f + 3] = finger.coupling_ratio * pip;
    }
    Ok(RobotHandPose {
        joint_angles: angles,
    })
}
