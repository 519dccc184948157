use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::FinetuneError;
use crate::affordance::{MU, PARAM_DIM, POSE, THETA};

/// Lower bound on every per-dimension standard deviation after a refit.
pub const STD_FLOOR: f64 = 1e-4;

/// Offset added to the prior's grasp parameters, in [`crate::affordance::GraspParams`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Residual(pub [f64; PARAM_DIM]);

impl Residual {
    pub const ZERO: Residual = Residual([0.0; PARAM_DIM]);
}

/// Independent Gaussian per residual dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistribution {
    pub mean: [f64; PARAM_DIM],
    pub std: [f64; PARAM_DIM],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Elites kept for each refit (E).
    pub elites: usize,
    /// Warm-up episodes before the first refit (M).
    pub warmup: usize,
    /// Total episodes (N).
    pub episodes: usize,
    pub sigma_mu: f64,
    pub sigma_theta: f64,
    pub sigma_pose: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            elites: 10,
            warmup: 10,
            episodes: 30,
            sigma_mu: 0.02,
            sigma_theta: 0.2,
            sigma_pose: 0.05,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), FinetuneError> {
        if self.elites == 0 || self.elites > self.episodes {
            return Err(FinetuneError::Config(format!(
                "need 1 <= elites <= episodes, got elites={} episodes={}",
                self.elites, self.episodes
            )));
        }
        if self.warmup > self.episodes {
            return Err(FinetuneError::Config(format!(
                "warm-up {} exceeds episode count {}",
                self.warmup, self.episodes
            )));
        }
        for (name, s) in [
            ("sigma_mu", self.sigma_mu),
            ("sigma_theta", self.sigma_theta),
            ("sigma_pose", self.sigma_pose),
        ] {
            if !(s.is_finite() && s > 0.0) {
                return Err(FinetuneError::Config(format!(
                    "{name} must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Zero-mean distribution with the configured per-block spreads.
pub fn init_distribution(cfg: &SessionConfig) -> Result<ResidualDistribution, FinetuneError> {
    cfg.validate()?;
    let mut std = [0.0; PARAM_DIM];
    std[MU].fill(cfg.sigma_mu);
    std[THETA].fill(cfg.sigma_theta);
    std[POSE].fill(cfg.sigma_pose);
    Ok(ResidualDistribution {
        mean: [0.0; PARAM_DIM],
        std,
    })
}

pub fn sample_residual<R: Rng + ?Sized>(d: &ResidualDistribution, rng: &mut R) -> Residual {
    Residual(std::array::from_fn(|i| {
        let z: f64 = StandardNormal.sample(rng);
        d.mean[i] + d.std[i] * z
    }))
}

/// Indices of the top-`e` rewards, highest first, ties to the lower index.
pub fn rank_rewards(rewards: &[f64], e: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    // stable sort keeps index order among equal rewards
    idx.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
    idx.truncate(e);
    idx
}

/// Per-dimension mean and population standard deviation (floored) of the residuals.
pub fn fit_residuals(residuals: &[Residual]) -> ResidualDistribution {
    let n = residuals.len() as f64;
    let mut mean = [0.0; PARAM_DIM];
    for r in residuals {
        mean.iter_mut().zip(&r.0).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; PARAM_DIM];
    for r in residuals {
        var.iter_mut()
            .zip(r.0.iter().zip(&mean))
            .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
    }
    let std = std::array::from_fn(|i| (var[i] / n).sqrt().max(STD_FLOOR));
    ResidualDistribution { mean, std }
}
