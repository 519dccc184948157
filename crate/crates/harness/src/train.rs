use rgrasp_core::finetune::SessionLog;
use rgrasp_core::policy::{elites_from_log, Policy, PolicyConfig, PolicyFile};

use crate::error::HarnessError;

/// Trains the configured head on the top `cfg.top_k` episodes of `log`.
pub fn train_from_log(log: &SessionLog, cfg: &PolicyConfig) -> Result<PolicyFile, HarnessError> {
    cfg.validate()?;
    if log.records.len() < cfg.top_k {
        return Err(HarnessError::Runtime(format!(
            "log has {} episodes, policy training needs at least {}",
            log.records.len(),
            cfg.top_k
        )));
    }
    let elites = elites_from_log(log, cfg.top_k);
    let trained = Policy::train(&elites, cfg)?;
    if let Some(last) = trained.losses.last() {
        log::info!("trained {:?} head, final loss {last:.6}", cfg.head);
    }
    Ok(PolicyFile::new(*cfg, trained.model))
}
