//! Session state shared between the fine-tuning loop and the HTTP API, and
//! the human reward channel that connects them.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use rgrasp_core::finetune::{
    EpisodeRecord, PendingEpisode, ResidualDistribution, RewardChannel, RewardError, SessionConfig,
    SessionLog,
};
use rgrasp_core::simenv::Outcome;

#[derive(Debug, Clone)]
pub struct LiveSession {
    pub task: String,
    pub reward_mode: String,
    pub config: SessionConfig,
    pub initial: ResidualDistribution,
    pub records: Vec<EpisodeRecord>,
    pub pending: Option<PendingEpisode>,
    /// A reward for `pending` has been accepted but not yet logged.
    pub submitted: bool,
    pub finished: bool,
}

impl LiveSession {
    pub fn from_log(task: &str, reward_mode: &str, log: &SessionLog) -> Self {
        LiveSession {
            task: task.into(),
            reward_mode: reward_mode.into(),
            config: log.config,
            initial: log.initial,
            records: log.records.clone(),
            pending: None,
            submitted: false,
            finished: log.is_complete(),
        }
    }

    /// Adds a finished episode and clears the pending slot it came from.
    pub fn push_record(&mut self, record: &EpisodeRecord) {
        if self
            .pending
            .as_ref()
            .is_some_and(|p| p.index == record.index)
        {
            self.pending = None;
            self.submitted = false;
        }
        self.records.push(record.clone());
        self.finished = self.records.len() >= self.config.episodes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Submission {
    pub index: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitError {
    OutOfRange,
    UnknownEpisode,
    Duplicate,
    /// The session loop is gone.
    Closed,
}

/// Handle used by the API: shared state plus the sending half of the reward queue.
#[derive(Debug, Clone)]
pub struct SessionHandle {
    state: Arc<Mutex<LiveSession>>,
    tx: Option<Sender<Submission>>,
}

impl SessionHandle {
    /// A handle that accepts no rewards (serving a finished or on-disk log).
    pub fn read_only(session: LiveSession) -> Self {
        SessionHandle {
            state: Arc::new(Mutex::new(session)),
            tx: None,
        }
    }

    /// A handle wired to a new [`HumanReward`] channel.
    pub fn with_channel(session: LiveSession, timeout: Option<Duration>) -> (Self, HumanReward) {
        let (tx, rx) = mpsc::channel();
        let state = Arc::new(Mutex::new(session));
        let handle = SessionHandle {
            state: state.clone(),
            tx: Some(tx),
        };
        (handle, HumanReward { state, rx, timeout })
    }

    pub fn lock(&self) -> MutexGuard<'_, LiveSession> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Validates and forwards one reward; at most one is accepted per episode.
    pub fn submit(&self, index: usize, reward: f64) -> Result<(), SubmitError> {
        if !(reward.is_finite() && (0.0..=1.0).contains(&reward)) {
            return Err(SubmitError::OutOfRange);
        }
        let mut s = self.lock();
        if index < s.records.len() {
            return Err(SubmitError::Duplicate);
        }
        if !s.pending.as_ref().is_some_and(|p| p.index == index) {
            return Err(SubmitError::UnknownEpisode);
        }
        if s.submitted {
            return Err(SubmitError::Duplicate);
        }
        let tx = self.tx.as_ref().ok_or(SubmitError::Closed)?;
        tx.send(Submission { index, reward })
            .map_err(|_| SubmitError::Closed)?;
        s.submitted = true;
        Ok(())
    }

    pub fn record_finished(&self, record: &EpisodeRecord) {
        self.lock().push_record(record);
    }
}

/// Blocks the session loop until the API delivers a reward for the pending episode.
pub struct HumanReward {
    state: Arc<Mutex<LiveSession>>,
    rx: Receiver<Submission>,
    timeout: Option<Duration>,
}

impl RewardChannel for HumanReward {
    fn collect(&mut self, pending: &PendingEpisode, _: &Outcome) -> Result<f64, RewardError> {
        {
            let mut s = self.state.lock().unwrap_or_else(|p| p.into_inner());
            // a retry after a timeout keeps the existing slot
            if s.pending.as_ref().map(|p| p.index) != Some(pending.index) {
                s.pending = Some(pending.clone());
                s.submitted = false;
            }
        }
        loop {
            let sub = match self.timeout {
                Some(t) => self.rx.recv_timeout(t).map_err(|e| match e {
                    RecvTimeoutError::Timeout => RewardError::Timeout,
                    RecvTimeoutError::Disconnected => RewardError::Closed,
                })?,
                None => self.rx.recv().map_err(|_| RewardError::Closed)?,
            };
            if sub.index == pending.index {
                return Ok(sub.reward);
            }
            log::warn!(
                "dropping reward for episode {} while {} is pending",
                sub.index,
                pending.index
            );
        }
    }
}
