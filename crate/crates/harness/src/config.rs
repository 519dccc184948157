//! Run configuration, read from a JSON file.
//!
//! Relative paths inside the file resolve against the file's directory.
//! Fine-tuning draws instances from the train half of the seed space
//! (`instance_seed` top bit clear); evaluation uses the test half.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rgrasp_core::affordance::{GraspParams, PriorSource, PriorTable, ToyAffordanceHead};
use rgrasp_core::finetune::{SessionConfig, TimeoutPolicy};
use rgrasp_core::policy::PolicyConfig;
use rgrasp_core::seeds::Split;
use rgrasp_core::simenv::{FeatureSynth, SimEnv, Task, DEFAULT_EMBEDDING_SCALE, FEATURE_DIM};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorConfig {
    /// Hidden optimum plus a bias; `null` takes the task's own bias.
    Synthetic {
        #[serde(default)]
        bias: Option<GraspParams>,
    },
    /// Serialized toy affordance head.
    Head { path: PathBuf },
    /// JSONL table keyed by observation id.
    Table { path: PathBuf },
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig::Synthetic { bias: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RewardMode {
    /// Simulator reward.
    #[default]
    Oracle,
    /// `exp(-|final - goal| / scale)` against the demonstration's final features.
    Embedding {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Scores posted through the HTTP API.
    Human {
        /// Seconds to wait per episode; `null` waits forever.
        #[serde(default)]
        timeout_s: Option<f64>,
        #[serde(default)]
        on_timeout: TimeoutPolicy,
    },
}

fn default_scale() -> f64 {
    DEFAULT_EMBEDDING_SCALE
}

impl RewardMode {
    pub fn label(&self) -> &'static str {
        match self {
            RewardMode::Oracle => "oracle",
            RewardMode::Embedding { .. } => "embedding",
            RewardMode::Human { .. } => "human",
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/session")
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in task id, or the id expected inside `task_file`.
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_file: Option<PathBuf>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub reward: RewardMode,
    #[serde(default)]
    pub session: SessionConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
}

impl RunConfig {
    /// Defaults for `task` with every other field at its default.
    pub fn for_task(task: &str) -> Self {
        RunConfig {
            task: task.into(),
            task_file: None,
            prior: PriorConfig::default(),
            reward: RewardMode::default(),
            session: SessionConfig::default(),
            policy: PolicyConfig::default(),
            out_dir: default_out_dir(),
            bind: default_bind(),
        }
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(format!("run config: {e}")))?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.task_file.as_mut() {
            fix(p);
        }
        match &mut self.prior {
            PriorConfig::Head { path } | PriorConfig::Table { path } => fix(path),
            PriorConfig::Synthetic { .. } => {}
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.session.validate()?;
        self.policy.validate()?;
        let task = self.task()?;
        if task.spec.id != self.task {
            return Err(HarnessError::Config(format!(
                "task file defines '{}', config names '{}'",
                task.spec.id, self.task
            )));
        }
        match &self.prior {
            PriorConfig::Head { path } | PriorConfig::Table { path } if !path.is_file() => {
                return Err(HarnessError::Config(format!(
                    "prior file {} does not exist",
                    path.display()
                )));
            }
            _ => {}
        }
        match self.reward {
            RewardMode::Embedding { scale } if !(scale.is_finite() && scale > 0.0) => {
                return Err(HarnessError::Config(format!(
                    "embedding scale must be positive, got {scale}"
                )));
            }
            RewardMode::Human {
                timeout_s: Some(t), ..
            } if !(t.is_finite() && t > 0.0) => {
                return Err(HarnessError::Config(format!(
                    "timeout_s must be positive, got {t}"
                )));
            }
            _ => {}
        }
        self.bind_addr()?;
        Ok(())
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, HarnessError> {
        self.bind
            .parse()
            .map_err(|e| HarnessError::Config(format!("bind address '{}': {e}", self.bind)))
    }

    pub fn task(&self) -> Result<Arc<Task>, HarnessError> {
        let task = match &self.task_file {
            Some(path) => Task::load(path),
            None => Task::builtin(&self.task),
        };
        task.map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn prior_source(&self) -> Result<PriorSource, HarnessError> {
        Ok(match &self.prior {
            PriorConfig::Synthetic { bias } => PriorSource::Synthetic { bias: *bias },
            PriorConfig::Table { path } => PriorSource::Table {
                table: PriorTable::load(path)?,
            },
            PriorConfig::Head { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                let head: ToyAffordanceHead = serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                PriorSource::Head { head }
            }
        })
    }

    /// Feature projection for a session seed; fine-tuning and evaluation
    /// under the same seed see the same features.
    pub fn synth_for(seed: u64) -> FeatureSynth {
        FeatureSynth::new(FEATURE_DIM, seed)
    }

    pub fn env(&self, split: Split) -> Result<SimEnv, HarnessError> {
        let seed = self.session.seed;
        Ok(SimEnv::new(
            self.task()?,
            Self::synth_for(seed),
            seed,
            split,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_json(r#"{"task": "pick-cup"}"#, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.session, SessionConfig::default());
        assert_eq!(cfg.reward, RewardMode::Oracle);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/runs/session"));
    }

    #[test]
    fn tagged_variants_parse() {
        let text = r#"{"task": "pour-cup", "reward": {"mode": "embedding"},
            "session": {"seed": 3, "episodes": 12}, "policy": {"head": "mlp"}}"#;
        let cfg = RunConfig::from_json(text, Path::new(".")).unwrap();
        assert_eq!(
            cfg.reward,
            RewardMode::Embedding {
                scale: DEFAULT_EMBEDDING_SCALE
            }
        );
        assert_eq!(cfg.session.seed, 3);
        assert_eq!(cfg.session.warmup, 10);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for text in [
            r#"{"task": "juggle"}"#,
            r#"{"task": "pick-cup", "reward": {"mode": "telepathy"}}"#,
            r#"{"task": "pick-cup", "reward": {"mode": "embedding", "scale": 0}}"#,
            r#"{"task": "pick-cup", "session": {"elites": 0}}"#,
            r#"{"task": "pick-cup", "prior": {"kind": "table", "path": "missing.jsonl"}}"#,
            r#"{"task": "pick-cup", "bind": "nowhere"}"#,
            r#"{"task": "pick-cup", "extra": 1}"#,
        ] {
            let err = RunConfig::from_json(text, Path::new("/nonexistent")).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }
}
