//! Residual policies distilled from elite fine-tuning episodes: a conditional
//! VAE, a deterministic MLP head, and a VAE that predicts absolute grasps.

mod cvae;
mod data;
mod mlp;

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affordance::GraspParams;

pub use cvae::{
    act, act_direct, kl_standard_normal, train_direct_vae, train_policy, Cvae, CvaePolicy,
    ElboTerms,
};
pub use data::{context_vector, elites_from_log, ElitePair, Normalizer};
pub use mlp::{act_mlp, train_mlp_head, MlpHead};

pub const POLICY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no elite episodes to train on")]
    EmptyElites,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid policy config: {0}")]
    Config(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    #[default]
    Cvae,
    Mlp,
    DirectVae,
}

impl std::str::FromStr for HeadKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cvae" => Ok(HeadKind::Cvae),
            "mlp" => Ok(HeadKind::Mlp),
            "direct-vae" => Ok(HeadKind::DirectVae),
            other => Err(format!("unknown head {other:?} (cvae, mlp, direct-vae)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub head: HeadKind,
    pub latent: usize,
    pub hidden: usize,
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Elite episodes taken from a session log.
    pub top_k: usize,
    /// Residual units per block (contact, wrist, hand) for normalization.
    pub residual_scale: [f64; 3],
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            head: HeadKind::Cvae,
            latent: 4,
            hidden: 64,
            beta: 0.1,
            lr: 1e-2,
            epochs: 2000,
            seed: 0,
            top_k: 10,
            residual_scale: [0.02, 0.2, 0.05],
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::Config(m.to_string()));
        if self.latent == 0 || self.hidden == 0 || self.top_k == 0 {
            return bad("latent, hidden and top_k must be at least 1");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) || !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("beta and lr must be positive");
        }
        if self
            .residual_scale
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return bad("residual scales must be positive");
        }
        Ok(())
    }
}

/// A trained model and its full-batch training loss, before training and after each epoch.
#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub model: T,
    pub losses: Vec<f64>,
}

impl<T> Trained<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Trained<U> {
        Trained {
            model: f(self.model),
            losses: self.losses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "head", rename_all = "kebab-case")]
pub enum Policy {
    Cvae(CvaePolicy),
    Mlp(MlpHead),
    DirectVae(CvaePolicy),
}

impl Policy {
    pub fn kind(&self) -> HeadKind {
        match self {
            Policy::Cvae(_) => HeadKind::Cvae,
            Policy::Mlp(_) => HeadKind::Mlp,
            Policy::DirectVae(_) => HeadKind::DirectVae,
        }
    }

    /// Trains the head selected by `cfg.head`.
    pub fn train(elites: &[ElitePair], cfg: &PolicyConfig) -> Result<Trained<Policy>, PolicyError> {
        Ok(match cfg.head {
            HeadKind::Cvae => train_policy(elites, cfg)?.map(Policy::Cvae),
            HeadKind::Mlp => train_mlp_head(elites, cfg)?.map(Policy::Mlp),
            HeadKind::DirectVae => train_direct_vae(elites, cfg)?.map(Policy::DirectVae),
        })
    }

    /// Grasp to execute for an observation with the given prior.
    pub fn act<R: Rng + ?Sized>(
        &self,
        features: &[f64],
        prior: &GraspParams,
        rng: &mut R,
    ) -> Result<GraspParams, PolicyError> {
        match self {
            Policy::Cvae(p) => Ok(prior.offset(&act(p, features, prior, rng)?.0)),
            Policy::Mlp(h) => Ok(prior.offset(&act_mlp(h, features, prior)?.0)),
            Policy::DirectVae(p) => act_direct(p, features, prior, rng),
        }
    }

    /// As [`Policy::act`] with the latent fixed at zero.
    pub fn act_mean(
        &self,
        features: &[f64],
        prior: &GraspParams,
    ) -> Result<GraspParams, PolicyError> {
        match self {
            Policy::Cvae(p) => Ok(prior.offset(&p.mean(features, prior)?)),
            Policy::Mlp(h) => Ok(prior.offset(&act_mlp(h, features, prior)?.0)),
            Policy::DirectVae(p) => {
                Ok(GraspParams::from_slice(&p.mean(features, prior)?).expect("fixed width"))
            }
        }
    }
}

/// Versioned on-disk policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub schema_version: u32,
    pub config: PolicyConfig,
    pub policy: Policy,
}

impl PolicyFile {
    pub fn new(config: PolicyConfig, policy: Policy) -> Self {
        PolicyFile {
            schema_version: POLICY_SCHEMA_VERSION,
            config,
            policy,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let text = serde_json::to_string(self).expect("policy serializes");
        std::fs::write(path, text).map_err(|e| PolicyError::Io(path.to_path_buf(), e))
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PolicyError::Io(path.to_path_buf(), e))?;
        let file: PolicyFile = serde_json::from_str(&text)
            .map_err(|e| PolicyError::Parse(path.to_path_buf(), e.to_string()))?;
        if file.schema_version != POLICY_SCHEMA_VERSION {
            return Err(PolicyError::Parse(
                path.to_path_buf(),
                format!("unsupported policy schema version {}", file.schema_version),
            ));
        }
        Ok(file)
    }
}
