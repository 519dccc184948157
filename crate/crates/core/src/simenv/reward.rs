use serde::{Deserialize, Serialize};

use super::features::{FeatureSynth, OUTCOME_DIM};
use super::task::TaskInstance;
use super::SimError;
use crate::affordance::GraspParams;
use crate::kinematics::{apply_deltas, norm, sub, Rotation, WristDelta, WristPose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub reward: f64,
    pub final_features: Vec<f64>,
    pub success: bool,
}

fn endpoint(deltas: &[WristDelta]) -> WristPose {
    apply_deltas(&WristPose::ORIGIN, deltas)
        .last()
        .copied()
        .unwrap_or(WristPose::ORIGIN)
}

/// Endpoint deviation of a replayed trajectory from the demonstration:
/// (position error in meters, rotation error in radians).
pub fn trajectory_error(applied: &[WristDelta], demo: &[WristDelta]) -> (f64, f64) {
    let (a, b) = (endpoint(applied), endpoint(demo));
    (
        norm(&sub(&a.position, &b.position)),
        a.orientation.angle_to(&b.orientation),
    )
}

/// Normalized per-dimension errors of a grasp plus trajectory endpoint errors.
fn outcome_descriptor(
    inst: &TaskInstance,
    xi: &GraspParams,
    tau: &[WristDelta],
) -> [f64; OUTCOME_DIM] {
    let spec = &inst.task.spec;
    let ls = &spec.length_scales;
    let target = &inst.optimum;
    let mut e = [0.0; OUTCOME_DIM];
    for i in 0..3 {
        e[i] = (xi.mu[i] - target.mu[i]) / ls.mu;
    }
    let rot = Rotation::from_euler_xyz(&target.theta_wrist).inverse()
        * Rotation::from_euler_xyz(&xi.theta_wrist);
    let rv = rot.to_rotation_vector();
    for i in 0..3 {
        e[3 + i] = rv[i] / ls.theta;
    }
    for i in 0..xi.hand_pose.len() {
        e[6 + i] = (xi.hand_pose[i] - target.hand_pose[i]) / ls.pose;
    }
    let (dp, dr) = trajectory_error(tau, &inst.task.demo);
    e[22] = dp / spec.trajectory_scales.position;
    e[23] = dr / spec.trajectory_scales.rotation;
    e
}

/// Executes grasp `xi` then trajectory `tau` on the instance.
///
/// The reward is a Gaussian bump around the hidden optimum, with the wrist
/// term measured as geodesic rotation distance, times a factor in `(0, 1]`
/// for the trajectory endpoint.
pub fn rollout(
    inst: &TaskInstance,
    xi: &GraspParams,
    tau: &[WristDelta],
    synth: &FeatureSynth,
) -> Outcome {
    let spec = &inst.task.spec;
    let e = outcome_descriptor(inst, xi, tau);
    // squared rotation-vector norm equals the squared geodesic distance
    let exponent: f64 = e.iter().map(|v| 0.5 * v * v).sum();
    let reward = (-exponent).exp();
    Outcome {
        reward,
        final_features: synth.final_features(inst, &e),
        success: reward >= spec.success_threshold,
    }
}

/// `exp(-|final - goal| / scale)`: a monotone map of negative embedding distance into `[0, 1]`.
pub fn embedding_reward(final_features: &[f64], goal: &[f64], scale: f64) -> Result<f64, SimError> {
    if final_features.len() != goal.len() {
        return Err(SimError::DimensionMismatch {
            expected: goal.len(),
            got: final_features.len(),
        });
    }
    if !(scale > 0.0) {
        return Err(SimError::InvalidInput(
            "embedding scale must be positive".into(),
        ));
    }
    let d = final_features
        .iter()
        .zip(goal)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok((-d / scale).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::features::FEATURE_DIM;
    use crate::simenv::task::{make_instance, Task};

    fn setup() -> (TaskInstance, FeatureSynth) {
        let task = Task::builtin("pick-cup").unwrap();
        (make_instance(&task, 3), FeatureSynth::new(FEATURE_DIM, 1))
    }

    #[test]
    fn optimum_scores_one() {
        let (inst, synth) = setup();
        let out = rollout(&inst, inst.optimum(), &inst.task.demo, &synth);
        assert_eq!(out.reward, 1.0);
        assert!(out.success);
    }

    #[test]
    fn far_contact_fails() {
        let (inst, synth) = setup();
        let mut xi = *inst.optimum();
        xi.mu[1] += 10.0 * inst.task.spec.length_scales.mu;
        let out = rollout(&inst, &xi, &inst.task.demo, &synth);
        assert!(out.reward <= (-50.0f64).exp() * (1.0 + 1e-9));
        assert!(!out.success);
    }

    #[test]
    fn reward_decreases_with_contact_error() {
        let (inst, synth) = setup();
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let mut xi = *inst.optimum();
            xi.mu[0] += 0.002 * k as f64;
            let r = rollout(&inst, &xi, &inst.task.demo, &synth).reward;
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn rotation_term_is_geodesic() {
        let (inst, synth) = setup();
        let mut xi = *inst.optimum();
        xi.theta_wrist[2] += 0.3;
        let r = rollout(&inst, &xi, &inst.task.demo, &synth).reward;
        let d = Rotation::from_euler_xyz(&xi.theta_wrist)
            .angle_to(&Rotation::from_euler_xyz(&inst.optimum().theta_wrist));
        let expected = (-d * d / (2.0 * 0.09)).exp();
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn trajectory_deviation_penalized() {
        let (inst, synth) = setup();
        let full = rollout(&inst, inst.optimum(), &inst.task.demo, &synth).reward;
        let short = rollout(&inst, inst.optimum(), &inst.task.demo[..20], &synth).reward;
        assert!(short < full && short > 0.0);
    }

    #[test]
    fn embedding_reward_closed_form() {
        let goal = vec![1.0, 2.0, 3.0];
        assert_eq!(embedding_reward(&goal, &goal, 0.5).unwrap(), 1.0);
        let fin = vec![1.0, 2.0, 3.5];
        let r = embedding_reward(&fin, &goal, 0.5).unwrap();
        assert!((r - (-1.0f64).exp()).abs() < 1e-15);
        assert!(embedding_reward(&fin[..2], &goal, 0.5).is_err());
    }

    #[test]
    fn optimum_final_features_independent_of_placement() {
        let task = Task::builtin("pour-cup").unwrap();
        let synth = FeatureSynth::new(FEATURE_DIM, 2);
        let a = make_instance(&task, 1);
        let b = make_instance(&task, 2);
        let fa = rollout(&a, a.optimum(), &task.demo, &synth).final_features;
        let fb = rollout(&b, b.optimum(), &task.demo, &synth).final_features;
        assert_eq!(fa, fb);
    }
}
