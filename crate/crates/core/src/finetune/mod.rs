//! Residual cross-entropy fine-tuning: sample residuals around the prior,
//! execute, collect rewards, and refit the residual distribution to the elites.

mod distribution;
pub mod persist;
mod session;

use thiserror::Error;

pub use distribution::{
    fit_residuals, init_distribution, rank_rewards, sample_residual, Residual,
    ResidualDistribution, SessionConfig, STD_FLOOR,
};
pub use session::{
    continue_session, rank_elites, refit_distribution, run_session, EmbeddingReward, Environment,
    EpisodeHook, EpisodeRecord, OracleReward, PendingEpisode, RewardChannel, RewardError,
    RunOptions, SessionLog, TimeoutPolicy,
};

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("need at least {needed} episodes, have {got}")]
    InsufficientEpisodes { needed: usize, got: usize },
    #[error("reward {0} outside [0, 1]")]
    InvalidReward(f64),
    #[error("session aborted after {} episodes: {reason}", log.records.len())]
    Aborted {
        reason: String,
        log: Box<SessionLog>,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
