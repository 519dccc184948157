//! Learning-curve export.
//!
//! Columns: `session`, `episode` (1-based), `reward`, `success` (0/1),
//! `reward_ma`, `success_ma`. The moving averages are trailing means over the
//! last `window` episodes of the same session, or fewer at the start. Rows
//! follow the order the sessions are given in, then episode order.

use std::io::Write;

use rgrasp_core::finetune::SessionLog;
use serde::Serialize;

use crate::error::HarnessError;

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub session: String,
    pub episode: usize,
    pub reward: f64,
    pub success: u8,
    pub reward_ma: f64,
    pub success_ma: f64,
}

pub fn curve_rows(name: &str, log: &SessionLog, window: usize) -> Vec<CurveRow> {
    let w = window.max(1);
    let rewards = log.rewards();
    log.records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lo = (i + 1).saturating_sub(w);
            let span = &log.records[lo..=i];
            let n = span.len() as f64;
            CurveRow {
                session: name.to_string(),
                episode: i + 1,
                reward: r.reward,
                success: r.success as u8,
                reward_ma: rewards[lo..=i].iter().sum::<f64>() / n,
                success_ma: span.iter().filter(|r| r.success).count() as f64 / n,
            }
        })
        .collect()
}

pub fn write_curves<W: Write>(
    out: W,
    sessions: &[(String, SessionLog)],
    window: usize,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| HarnessError::Runtime(format!("writing curves: {e}"));
    let mut wrote = false;
    for (name, log) in sessions {
        for row in curve_rows(name, log, window) {
            w.serialize(row).map_err(to_err)?;
            wrote = true;
        }
    }
    if !wrote {
        w.write_record([
            "session",
            "episode",
            "reward",
            "success",
            "reward_ma",
            "success_ma",
        ])
        .map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| HarnessError::Runtime(format!("writing curves: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rgrasp_core::affordance::GraspParams;
    use rgrasp_core::finetune::{EpisodeRecord, SessionConfig};

    fn log(rewards: &[f64]) -> SessionLog {
        let mut log = SessionLog::new(SessionConfig::default()).unwrap();
        for (i, r) in rewards.iter().enumerate() {
            log.records.push(EpisodeRecord {
                index: i,
                observation_id: format!("o{i}"),
                features: vec![],
                prior: GraspParams::ZERO,
                residual: rgrasp_core::finetune::Residual::ZERO,
                executed: GraspParams::ZERO,
                reward: *r,
                success: *r >= 0.6,
                refit: false,
                distribution: log.initial,
                elites: vec![],
                started_ms: 0,
                finished_ms: 0,
            });
        }
        log
    }

    #[test]
    fn window_five_at_episode_five() {
        let rewards = [0.1, 0.2, 0.7, 0.4, 0.9, 0.8];
        let rows = curve_rows("s", &log(&rewards), 5);
        // hand-computed trailing means
        assert!((rows[4].reward_ma - (0.1 + 0.2 + 0.7 + 0.4 + 0.9) / 5.0).abs() < 1e-15);
        assert!((rows[5].reward_ma - (0.2 + 0.7 + 0.4 + 0.9 + 0.8) / 5.0).abs() < 1e-15);
        assert!((rows[1].reward_ma - 0.15).abs() < 1e-15);
        assert_eq!(rows[4].success_ma, 0.4);
        assert_eq!(rows[5].success_ma, 0.6);
    }

    #[test]
    fn csv_has_header_and_exact_rewards() {
        let rewards = [0.123456789012345, 0.5, 1.0];
        let mut buf = Vec::new();
        write_curves(&mut buf, &[("a".into(), log(&rewards))], 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "session,episode,reward,success,reward_ma,success_ma"
        );
        assert_eq!(lines.len(), 4);
        let back: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, rewards[0]);
    }

    #[test]
    fn empty_log_still_has_header() {
        let mut buf = Vec::new();
        write_curves(&mut buf, &[("a".into(), log(&[]))], 5).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}
