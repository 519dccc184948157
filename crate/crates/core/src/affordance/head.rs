use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{grasp_loss, LossWeights};
use super::params::{GraspParams, PARAM_DIM};
use super::AffordanceError;
use crate::nn::{Adam, Mlp};

/// Feature vector to grasp parameters through one tanh hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyAffordanceHead {
    pub net: Mlp,
}

impl ToyAffordanceHead {
    pub fn new(feature_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ToyAffordanceHead {
            net: Mlp::new(feature_dim, hidden, PARAM_DIM, &mut rng),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.net.inputs
    }

    pub fn predict(&self, features: &[f64]) -> Result<GraspParams, AffordanceError> {
        if features.len() != self.net.inputs {
            return Err(AffordanceError::DimensionMismatch {
                expected: self.net.inputs,
                got: features.len(),
            });
        }
        let out = self.net.forward(features).output;
        Ok(GraspParams::from_slice(&out).expect("output width is PARAM_DIM"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    /// Peak Adam step size.
    pub lr: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        HeadTrainConfig {
            epochs: 500,
            lr: 0.01,
            hidden: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedHead {
    pub head: ToyAffordanceHead,
    /// Full-batch mean loss before training and after every epoch.
    pub losses: Vec<f64>,
}

/// Mean grasp loss over `data`, accumulating the parameter gradient if asked.
pub fn dataset_loss(
    net: &Mlp,
    data: &[(Vec<f64>, GraspParams)],
    weights: &LossWeights,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let n = data.len() as f64;
    let mut total = 0.0;
    for (x, target) in data {
        let trace = net.forward(x);
        let pred = GraspParams::from_slice(&trace.output).expect("width");
        let (l, g) = grasp_loss(&pred, target, weights);
        total += l / n;
        if let Some(grad) = grad.as_deref_mut() {
            let g: Vec<f64> = g.iter().map(|v| v / n).collect();
            net.backward(x, &trace, &g, grad);
        }
    }
    total
}

/// Full-batch Adam with a cosine step schedule. A step that would raise the
/// loss is rejected and the step scale halved, so the loss curve is monotone.
pub fn train_toy_head(
    data: &[(Vec<f64>, GraspParams)],
    weights: &LossWeights,
    cfg: &HeadTrainConfig,
) -> Result<TrainedHead, AffordanceError> {
    let first = data.first().ok_or(AffordanceError::EmptyDataset)?;
    let dim = first.0.len();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != dim) {
        return Err(AffordanceError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let mut head = ToyAffordanceHead::new(dim, cfg.hidden, cfg.seed);
    let mut grad = vec![0.0; head.net.params.len()];
    let mut adam = Adam::new(grad.len(), cfg.lr);
    let mut scale = 1.0;
    let mut loss = dataset_loss(&head.net, data, weights, None);
    let mut losses = vec![loss];
    for epoch in 0..cfg.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        dataset_loss(&head.net, data, weights, Some(&mut grad));
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / cfg.epochs as f64).cos());
        adam.set_lr(cfg.lr * cosine * scale);
        let mut trial = head.net.clone();
        adam.step(&mut trial.params, &grad);
        let l = dataset_loss(&trial, data, weights, None);
        if l <= loss {
            head.net = trial;
            loss = l;
            scale = (scale * 1.1).min(1.0);
        } else {
            scale *= 0.5;
        }
        losses.push(loss);
    }
    Ok(TrainedHead { head, losses })
}
