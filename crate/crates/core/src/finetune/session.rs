use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{
    fit_residuals, init_distribution, rank_rewards, sample_residual, Residual,
    ResidualDistribution, SessionConfig,
};
use super::FinetuneError;
use crate::affordance::{GraspParams, PriorSource};
use crate::seeds;
use crate::simenv::{embedding_reward, Observation, Outcome, Schematic};

const RESIDUAL_STREAM: u64 = 0x7e51d;

/// Where episodes happen.
pub trait Environment {
    fn observe(&mut self, episode: usize) -> Observation;
    fn execute(&mut self, obs: &Observation, xi: &GraspParams) -> Outcome;
    fn schematic(&self, _obs: &Observation, _xi: &GraspParams) -> Option<Schematic> {
        None
    }
    fn reset(&mut self) {}
}

/// An executed episode waiting for its reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingEpisode {
    pub index: usize,
    pub observation_id: String,
    pub prior: GraspParams,
    pub residual: Residual,
    pub executed: GraspParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schematic: Option<Schematic>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("timed out waiting for a reward")]
    Timeout,
    #[error("reward channel closed")]
    Closed,
    #[error("{0}")]
    Other(String),
}

/// Source of the scalar reward for an executed episode.
pub trait RewardChannel {
    fn collect(&mut self, pending: &PendingEpisode, outcome: &Outcome) -> Result<f64, RewardError>;
}

/// Uses the simulator's reward directly.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleReward;

impl RewardChannel for OracleReward {
    fn collect(&mut self, _: &PendingEpisode, outcome: &Outcome) -> Result<f64, RewardError> {
        Ok(outcome.reward)
    }
}

/// Scores the final embedding against a goal embedding.
#[derive(Debug, Clone)]
pub struct EmbeddingReward {
    pub goal: Vec<f64>,
    pub scale: f64,
}

impl RewardChannel for EmbeddingReward {
    fn collect(&mut self, _: &PendingEpisode, outcome: &Outcome) -> Result<f64, RewardError> {
        embedding_reward(&outcome.final_features, &self.goal, self.scale)
            .map_err(|e| RewardError::Other(e.to_string()))
    }
}

impl<T: RewardChannel + ?Sized> RewardChannel for &mut T {
    fn collect(&mut self, pending: &PendingEpisode, outcome: &Outcome) -> Result<f64, RewardError> {
        (**self).collect(pending, outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeoutPolicy {
    /// Keep waiting; the session is paused until a reward arrives.
    #[default]
    Wait,
    /// Stop and hand back the episodes completed so far.
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub observation_id: String,
    pub features: Vec<f64>,
    pub prior: GraspParams,
    pub residual: Residual,
    pub executed: GraspParams,
    pub reward: f64,
    pub success: bool,
    /// True when the distribution was refit after this episode.
    pub refit: bool,
    /// Distribution after this episode.
    pub distribution: ResidualDistribution,
    /// Elite indices after this episode, best first.
    pub elites: Vec<usize>,
    pub started_ms: u64,
    pub finished_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub initial: ResidualDistribution,
    pub records: Vec<EpisodeRecord>,
}

impl SessionLog {
    pub fn new(config: SessionConfig) -> Result<Self, FinetuneError> {
        Ok(SessionLog {
            initial: init_distribution(&config)?,
            config,
            records: Vec::new(),
        })
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }

    /// The distribution before the first episode, then after each one.
    pub fn snapshots(&self) -> Vec<ResidualDistribution> {
        std::iter::once(self.initial)
            .chain(self.records.iter().map(|r| r.distribution))
            .collect()
    }

    pub fn current(&self) -> ResidualDistribution {
        self.records.last().map_or(self.initial, |r| r.distribution)
    }

    pub fn elites(&self) -> &[usize] {
        self.records.last().map_or(&[], |r| &r.elites)
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() >= self.config.episodes
    }

    /// Mean reward of the current elite set.
    pub fn elite_mean_reward(&self) -> Option<f64> {
        let elites = self.elites();
        (!elites.is_empty()).then(|| {
            elites.iter().map(|&i| self.records[i].reward).sum::<f64>() / elites.len() as f64
        })
    }
}

/// Top-`e` episodes by reward, ties to the earlier episode.
pub fn rank_elites(log: &SessionLog, e: usize) -> Vec<usize> {
    rank_rewards(&log.rewards(), e)
}

/// Fits the residual distribution to the top-`e` episodes' residuals.
pub fn refit_distribution(
    log: &SessionLog,
    e: usize,
) -> Result<ResidualDistribution, FinetuneError> {
    if e == 0 || log.records.len() < e {
        return Err(FinetuneError::InsufficientEpisodes {
            needed: e,
            got: log.records.len(),
        });
    }
    let residuals: Vec<Residual> = rank_elites(log, e)
        .into_iter()
        .map(|i| log.records[i].residual)
        .collect();
    Ok(fit_residuals(&residuals))
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub type EpisodeHook<'a> = Box<dyn FnMut(&EpisodeRecord) -> std::io::Result<()> + 'a>;

pub struct RunOptions<'a> {
    pub on_timeout: TimeoutPolicy,
    /// Called once per completed episode, before the next one starts.
    pub on_episode: Option<EpisodeHook<'a>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            on_timeout: TimeoutPolicy::Wait,
            on_episode: None,
        }
    }
}

/// Runs a fresh session of `cfg.episodes` episodes.
pub fn run_session<E: Environment, R: RewardChannel>(
    env: &mut E,
    prior: &PriorSource,
    reward: &mut R,
    cfg: &SessionConfig,
) -> Result<SessionLog, FinetuneError> {
    continue_session(
        env,
        prior,
        reward,
        SessionLog::new(*cfg)?,
        RunOptions::default(),
    )
}

/// Runs the remaining episodes of `log`. Residual draws depend only on the
/// session seed and episode index, so resuming a partial log yields the same
/// episodes an uninterrupted run would have.
pub fn continue_session<E: Environment, R: RewardChannel>(
    env: &mut E,
    prior: &PriorSource,
    reward: &mut R,
    mut log: SessionLog,
    mut opts: RunOptions<'_>,
) -> Result<SessionLog, FinetuneError> {
    let cfg = log.config;
    cfg.validate()?;
    let mut dist = log.current();
    for index in log.records.len()..cfg.episodes {
        let started_ms = now_ms();
        let obs = env.observe(index);
        let prior_xi = match prior.predict(&obs) {
            Ok(xi) => xi,
            Err(e) => {
                return Err(FinetuneError::Aborted {
                    reason: e.to_string(),
                    log: Box::new(log),
                })
            }
        };
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, RESIDUAL_STREAM, index as u64));
        let residual = sample_residual(&dist, &mut rng);
        let executed = prior_xi.offset(&residual.0);
        let outcome = env.execute(&obs, &executed);
        let pending = PendingEpisode {
            index,
            observation_id: obs.id.clone(),
            prior: prior_xi,
            residual,
            executed,
            schematic: env.schematic(&obs, &executed),
        };
        let value = loop {
            match reward.collect(&pending, &outcome) {
                Ok(v) => break v,
                Err(RewardError::Timeout) if opts.on_timeout == TimeoutPolicy::Wait => continue,
                Err(e) => {
                    return Err(FinetuneError::Aborted {
                        reason: e.to_string(),
                        log: Box::new(log),
                    })
                }
            }
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(FinetuneError::InvalidReward(value));
        }
        env.reset();

        log.records.push(EpisodeRecord {
            index,
            observation_id: obs.id.clone(),
            features: obs.features.clone(),
            prior: prior_xi,
            residual,
            executed,
            reward: value,
            success: outcome.success,
            refit: false,
            distribution: dist,
            elites: Vec::new(),
            started_ms,
            finished_ms: 0,
        });
        // no refit until the warm-up episodes are done
        let refit = index + 1 > cfg.warmup;
        if refit {
            dist = refit_distribution(&log, cfg.elites.min(log.records.len()))?;
        }
        let elites = rank_elites(&log, cfg.elites);
        let record = log.records.last_mut().expect("just pushed");
        record.refit = refit;
        record.distribution = dist;
        record.elites = elites;
        record.finished_ms = now_ms();
        if let Some(cb) = opts.on_episode.as_mut() {
            cb(record).map_err(FinetuneError::Io)?;
        }
    }
    Ok(log)
}
