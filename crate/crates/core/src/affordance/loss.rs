use serde::{Deserialize, Serialize};

use super::params::{GraspParams, MU, PARAM_DIM, POSE, THETA};

/// Per-block weights of the grasp regression loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mu: f64,
    pub theta: f64,
    pub pose: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            mu: 1.0,
            theta: 0.1,
            pose: 0.1,
        }
    }
}

/// Weighted sum of unsquared L2 distances per block:
/// `w_mu |mu - mu'| + w_theta |theta - theta'| + w_P |P - P'|`.
///
/// Returns the loss and its gradient with respect to `pred`. A block whose
/// distance is exactly zero contributes a zero subgradient.
pub fn grasp_loss(
    pred: &GraspParams,
    target: &GraspParams,
    w: &LossWeights,
) -> (f64, [f64; PARAM_DIM]) {
    let diff = pred.difference(target);
    let mut grad = [0.0; PARAM_DIM];
    let mut loss = 0.0;
    for (range, weight) in [(MU, w.mu), (THETA, w.theta), (POSE, w.pose)] {
        let n = diff[range.clone()]
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt();
        loss += weight * n;
        if n > 0.0 {
            for i in range {
                grad[i] = weight * diff[i] / n;
            }
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let mut g = GraspParams::ZERO;
        g.mu = [0.1, 0.2, 0.3];
        g.hand_pose[4] = 0.8;
        let (l, grad) = grasp_loss(&g, &g, &LossWeights::default());
        assert_eq!(l, 0.0);
        assert!(grad.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn contact_only_error() {
        let target = GraspParams::ZERO;
        let mut pred = target;
        pred.mu = [0.3, 0.0, 4.0];
        let (l, _) = grasp_loss(&pred, &target, &LossWeights::default());
        assert!((l - 16.09_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weights_default() {
        let w = LossWeights::default();
        assert_eq!((w.mu, w.theta, w.pose), (1.0, 0.1, 0.1));
    }
}
