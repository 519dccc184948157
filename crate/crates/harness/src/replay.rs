//! Re-executes logged episodes in the simulator.

use rgrasp_core::finetune::{Environment, SessionLog};
use rgrasp_core::seeds::Split;
use serde::Serialize;

use crate::config::{RewardMode, RunConfig};
use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayRow {
    pub index: usize,
    pub logged_reward: f64,
    pub sim_reward: f64,
    pub success: bool,
    /// Logged and simulated rewards agree bit for bit (oracle mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches: Option<bool>,
}

/// Rebuilds each episode's instance from the session seed and rolls out the
/// logged grasp again.
pub fn replay(cfg: &RunConfig, log: &SessionLog) -> Result<Vec<ReplayRow>, HarnessError> {
    let mut env = cfg.env(Split::Train)?;
    let oracle = cfg.reward == RewardMode::Oracle;
    let mut rows = Vec::with_capacity(log.records.len());
    for r in &log.records {
        let obs = env.observe(r.index);
        if obs.id != r.observation_id {
            return Err(HarnessError::Runtime(format!(
                "episode {}: log names instance {}, configuration yields {}",
                r.index, r.observation_id, obs.id
            )));
        }
        let out = env.execute(&obs, &r.executed);
        rows.push(ReplayRow {
            index: r.index,
            logged_reward: r.reward,
            sim_reward: out.reward,
            success: out.success,
            matches: oracle.then(|| out.reward.to_bits() == r.reward.to_bits()),
        });
    }
    Ok(rows)
}
