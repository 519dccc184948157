use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::task::{TaskInstance, TASK_IDS};
use crate::seeds;

/// Default feature width.
pub const FEATURE_DIM: usize = 32;

/// Width of the scene descriptor: object position plus task one-hot.
pub const SCENE_DIM: usize = 3 + TASK_IDS.len();

/// Width of the outcome descriptor: 22 normalized grasp errors plus two
/// trajectory endpoint errors.
pub const OUTCOME_DIM: usize = 24;

/// Fixed random linear maps standing in for an image encoder.
///
/// Initial-scene features are `A [object position; task one-hot] + noise`,
/// with the noise seeded by the instance. End-of-episode features are
/// `A [0; task one-hot] + B e` where `e` is the normalized outcome descriptor,
/// so a perfect grasp reproduces the same final embedding wherever the object
/// started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSynth {
    pub dim: usize,
    pub noise_std: f64,
    scene: Vec<f64>,
    outcome: Vec<f64>,
}

impl FeatureSynth {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self::with_noise(dim, seed, 1e-3)
    }

    pub fn with_noise(dim: usize, seed: u64, noise_std: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0xfea7, 0));
        let mut draw = |n: usize, scale: f64| -> Vec<f64> {
            (0..n)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>()
        };
        let scene = draw(dim * SCENE_DIM, 1.0);
        let outcome = draw(dim * OUTCOME_DIM, 1.0 / (dim as f64).sqrt());
        FeatureSynth {
            dim,
            noise_std,
            scene,
            outcome,
        }
    }

    /// Column `j` of the scene projection.
    pub fn scene_column(&self, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.scene[i * SCENE_DIM + j])
            .collect()
    }

    fn project(matrix: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += matrix[i * cols..(i + 1) * cols]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
    }

    fn scene_vector(inst: &TaskInstance, with_position: bool) -> [f64; SCENE_DIM] {
        let mut v = [0.0; SCENE_DIM];
        if with_position {
            v[..3].copy_from_slice(&inst.object_position);
        }
        if let Some(k) = inst.task.spec.one_hot_index() {
            v[3 + k] = 1.0;
        }
        v
    }

    pub fn synth_features(&self, inst: &TaskInstance) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        Self::project(
            &self.scene,
            SCENE_DIM,
            &Self::scene_vector(inst, true),
            &mut out,
        );
        if self.noise_std > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(inst.seed, 0x7015e, 0));
            for o in &mut out {
                let z: f64 = StandardNormal.sample(&mut rng);
                *o += self.noise_std * z;
            }
        }
        out
    }

    pub fn final_features(&self, inst: &TaskInstance, outcome: &[f64; OUTCOME_DIM]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        Self::project(
            &self.scene,
            SCENE_DIM,
            &Self::scene_vector(inst, false),
            &mut out,
        );
        Self::project(&self.outcome, OUTCOME_DIM, outcome, &mut out);
        out
    }
}
