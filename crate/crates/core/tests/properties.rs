use proptest::prelude::*;
use rgrasp_core::affordance::{
    deproject, grasp_loss, softargmax_unchecked, CameraIntrinsics, GraspParams, LossWeights,
    PARAM_DIM,
};
use rgrasp_core::kinematics::{
    apply_deltas, extract_post_grasp, retarget_mano, swing_twist, HandLayout, RobotHandPose,
    Rotation, WristPose, POST_GRASP_STEPS,
};

fn vec3(r: f64) -> impl Strategy<Value = [f64; 3]> {
    [-r..r, -r..r, -r..r]
}

fn unit() -> impl Strategy<Value = [f64; 3]> {
    vec3(1.0)
        .prop_filter("non-degenerate", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 1e-2
        })
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
}

fn params() -> impl Strategy<Value = GraspParams> {
    prop::collection::vec(-2.0..2.0f64, PARAM_DIM)
        .prop_map(|v| GraspParams::from_slice(&v).unwrap())
}

proptest! {
    #[test]
    fn swing_twist_reconstructs(rv in vec3(3.0), axis in unit()) {
        let r = Rotation::from_rotation_vector(&rv);
        let (angle, swing) = swing_twist(&r, &axis).unwrap();
        let back = swing * Rotation::from_axis_angle(&axis, angle).unwrap();
        prop_assert!(back.distance_inf(&r) < 1e-9);
        // swing axis is perpendicular to the twist axis
        let s = swing.to_rotation_vector();
        let d = s.iter().zip(&axis).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!(d.abs() < 1e-9);
    }

    #[test]
    fn softargmax_ignores_constant_shift(
        scores in prop::collection::vec(-5.0..5.0f64, 12),
        shift in -50.0..50.0f64,
        t in 0.1..3.0f64,
    ) {
        let a = softargmax_unchecked(3, 4, &scores, t).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let b = softargmax_unchecked(3, 4, &shifted, t).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        prop_assert!(a[0] >= 0.0 && a[0] <= 2.0 && a[1] >= 0.0 && a[1] <= 3.0);
    }

    #[test]
    fn deproject_inverts_project(u in 0.0..640.0f64, v in 0.0..480.0f64, depth in 0.1..3.0f64) {
        let k = CameraIntrinsics::new(600.0, 610.0, 320.0, 240.0).unwrap();
        let p = deproject([u, v], depth, &k).unwrap();
        let back = k.project(&p);
        prop_assert!((back[0] - u).abs() < 1e-9 && (back[1] - v).abs() < 1e-9);
        prop_assert_eq!(p[2], depth);
    }

    #[test]
    fn grasp_loss_nonnegative_and_symmetric(a in params(), b in params()) {
        let w = LossWeights::default();
        let (lab, _) = grasp_loss(&a, &b, &w);
        let (lba, _) = grasp_loss(&b, &a, &w);
        prop_assert!(lab >= 0.0);
        prop_assert!((lab - lba).abs() < 1e-12);
    }

    #[test]
    fn delta_round_trip(steps in prop::collection::vec((vec3(0.05), vec3(0.2)), POST_GRASP_STEPS + 5)) {
        let mut poses = vec![WristPose {
            position: [0.4, 0.0, 0.2],
            orientation: Rotation::from_rotation_vector(&[0.1, -0.3, 0.2]),
        }];
        for (dp, dr) in &steps {
            let last = *poses.last().unwrap();
            poses.push(WristPose {
                position: [last.position[0] + dp[0], last.position[1] + dp[1], last.position[2] + dp[2]],
                orientation: last.orientation * Rotation::from_rotation_vector(dr),
            });
        }
        let deltas = extract_post_grasp(&poses).unwrap();
        prop_assert_eq!(deltas.len(), POST_GRASP_STEPS);
        let replay = apply_deltas(&poses[0], &deltas);
        for (a, b) in replay.iter().zip(&poses[1..]) {
            for i in 0..3 {
                prop_assert!((a.position[i] - b.position[i]).abs() < 1e-9);
            }
            prop_assert!(a.orientation.distance_inf(&b.orientation) < 1e-9);
        }
    }

    #[test]
    fn retarget_inverts_compose(fr in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 4)) {
        let layout = HandLayout::default_layout();
        let mut angles = [0.0; 16];
        for (f, finger) in layout.fingers.iter().enumerate() {
            let lerp = |[lo, hi]: [f64; 2], t: f64| lo + t * (hi - lo);
            angles[4 * f] = lerp(finger.mcp.spread_limits.unwrap_or([0.0, 0.0]), fr[f].0);
            angles[4 * f + 1] = lerp(finger.mcp.bend_limits, fr[f].1);
            angles[4 * f + 2] = lerp(finger.pip_range(), fr[f].2);
            angles[4 * f + 3] = finger.coupling_ratio * angles[4 * f + 2];
        }
        let pose = RobotHandPose { joint_angles: angles };
        let back = retarget_mano(&layout.compose_mano(&pose).unwrap(), &layout).unwrap();
        for (a, b) in back.joint_angles.iter().zip(&angles) {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
