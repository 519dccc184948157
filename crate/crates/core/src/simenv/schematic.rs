use serde::{Deserialize, Serialize};

use super::task::TaskInstance;
use crate::affordance::GraspParams;
use crate::kinematics::{Rotation, FINGERS};

/// Bend angle treated as a fully closed finger when computing closure.
pub const FULL_CLOSURE_RAD: f64 = 1.6;

const ARROW_LENGTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
        ]
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Top-down (x, y) sketch of an episode for the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schematic {
    pub workspace: Rect,
    pub object_center: [f64; 2],
    pub object_radius: f64,
    pub contact: [f64; 2],
    pub wrist_arrow: [[f64; 2]; 2],
    /// Thumb, index, middle, ring; 0 open, 1 closed.
    pub finger_closure: [f64; FINGERS],
}

impl Schematic {
    pub fn points(&self) -> [[f64; 2]; 4] {
        [
            self.object_center,
            self.contact,
            self.wrist_arrow[0],
            self.wrist_arrow[1],
        ]
    }
}

pub fn render_schematic(inst: &TaskInstance, xi: &GraspParams) -> Schematic {
    let spec = &inst.task.spec;
    let ws = Rect {
        min: [spec.workspace.min[0], spec.workspace.min[1]],
        max: [spec.workspace.max[0], spec.workspace.max[1]],
    };
    let contact = ws.clamp([xi.mu[0], xi.mu[1]]);
    let forward = Rotation::from_euler_xyz(&xi.theta_wrist).rotate(&[1.0, 0.0, 0.0]);
    let tip = ws.clamp([
        contact[0] + ARROW_LENGTH * forward[0],
        contact[1] + ARROW_LENGTH * forward[1],
    ]);
    let finger_closure = std::array::from_fn(|f| {
        let bends = &xi.hand_pose[4 * f + 1..4 * f + 4];
        (bends.iter().sum::<f64>() / (3.0 * FULL_CLOSURE_RAD)).clamp(0.0, 1.0)
    });
    Schematic {
        workspace: ws,
        object_center: ws.clamp([inst.object_position[0], inst.object_position[1]]),
        object_radius: spec.footprint_radius,
        contact,
        wrist_arrow: [contact, tip],
        finger_closure,
    }
}
