use std::time::Duration;

use rgrasp_core::finetune::persist::{LogDir, SessionHeader, LOG_SCHEMA_VERSION};
use rgrasp_core::finetune::{
    continue_session, EmbeddingReward, EpisodeRecord, FinetuneError, OracleReward, RewardChannel,
    RunOptions, SessionLog, TimeoutPolicy,
};
use rgrasp_core::seeds::Split;

use crate::config::{RewardMode, RunConfig};
use crate::error::HarnessError;
use crate::live::{LiveSession, SessionHandle};

/// Opens the session directory for `cfg`, creating it or loading the
/// partial log when resuming.
pub fn open_session(cfg: &RunConfig, resume: bool) -> Result<(LogDir, SessionLog), HarnessError> {
    let dir = LogDir::new(&cfg.out_dir);
    if dir.exists() {
        if !resume {
            return Err(HarnessError::Config(format!(
                "{} already holds a session; pass --resume to continue it",
                cfg.out_dir.display()
            )));
        }
        let (header, log) = dir.load()?;
        if header.config != cfg.session {
            return Err(HarnessError::Config(
                "session settings differ from the log being resumed".into(),
            ));
        }
        return Ok((dir, log));
    }
    let log = SessionLog::new(cfg.session)?;
    let mut meta = serde_json::to_value(cfg).expect("config serializes");
    // the header stays identical wherever the session is written
    meta.as_object_mut()
        .expect("config is an object")
        .remove("out_dir");
    dir.create(&SessionHeader {
        schema_version: LOG_SCHEMA_VERSION,
        config: log.config,
        initial: log.initial,
        meta,
    })?;
    Ok((dir, log))
}

/// Runs the remaining episodes, appending each to the episode file as it
/// completes. `on_record` sees every new record after it is on disk.
pub fn drive<R: RewardChannel>(
    cfg: &RunConfig,
    dir: &LogDir,
    log: SessionLog,
    reward: &mut R,
    on_timeout: TimeoutPolicy,
    mut on_record: impl FnMut(&EpisodeRecord),
) -> Result<SessionLog, HarnessError> {
    let mut env = cfg.env(Split::Train)?;
    let prior = cfg.prior_source()?;
    let mut out = dir.appender()?;
    let opts = RunOptions {
        on_timeout,
        on_episode: Some(Box::new(|r: &EpisodeRecord| {
            out.append(r)?;
            on_record(r);
            Ok(())
        })),
    };
    match continue_session(&mut env, &prior, reward, log, opts) {
        Ok(log) => Ok(log),
        Err(FinetuneError::Aborted { reason, log }) => Err(HarnessError::Runtime(format!(
            "session stopped after {} episodes ({reason}); the partial log in {} can be resumed",
            log.records.len(),
            dir.root.display()
        ))),
        Err(e) => Err(e.into()),
    }
}

/// Fine-tunes with an automated reward channel (oracle or embedding).
pub fn run_automatic(cfg: &RunConfig, resume: bool) -> Result<SessionLog, HarnessError> {
    let (dir, log) = open_session(cfg, resume)?;
    match cfg.reward {
        RewardMode::Oracle => drive(
            cfg,
            &dir,
            log,
            &mut OracleReward,
            TimeoutPolicy::Wait,
            |_| {},
        ),
        RewardMode::Embedding { scale } => {
            let goal = cfg.env(Split::Train)?.goal_embedding();
            let mut reward = EmbeddingReward { goal, scale };
            drive(cfg, &dir, log, &mut reward, TimeoutPolicy::Wait, |_| {})
        }
        RewardMode::Human { .. } => Err(HarnessError::Config(
            "human reward mode needs the API server; use run_human".into(),
        )),
    }
}

/// Fine-tunes with rewards posted through `handle`'s API. Blocks per episode.
pub fn run_human<'a>(
    cfg: &'a RunConfig,
    dir: &'a LogDir,
    log: SessionLog,
    timeout_s: Option<f64>,
    on_timeout: TimeoutPolicy,
) -> Result<
    (
        SessionHandle,
        impl FnOnce() -> Result<SessionLog, HarnessError> + 'a,
    ),
    HarnessError,
> {
    let live = LiveSession::from_log(&cfg.task, cfg.reward.label(), &log);
    let (handle, mut reward) =
        SessionHandle::with_channel(live, timeout_s.map(Duration::from_secs_f64));
    let sink = handle.clone();
    let run = move || {
        let result = drive(cfg, dir, log, &mut reward, on_timeout, |r| {
            sink.record_finished(r)
        });
        sink.lock().finished = true;
        result
    };
    Ok((handle, run))
}
