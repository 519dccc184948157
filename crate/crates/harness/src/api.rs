//! HTTP+JSON API for the operator panel. Every payload carries
//! `schema_version`; hidden optima and prior biases are never serialized.

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rgrasp_core::affordance::GraspParams;
use rgrasp_core::finetune::{EpisodeRecord, Residual, ResidualDistribution, SessionConfig};
use rgrasp_core::simenv::Schematic;
use serde::{Deserialize, Serialize};

use crate::live::{SessionHandle, SubmitError};

pub const API_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: u32,
    pub task: String,
    pub reward_mode: String,
    pub config: SessionConfig,
    pub episodes_done: usize,
    pub episodes_total: usize,
    pub warmup: usize,
    pub in_warmup: bool,
    pub pending_index: Option<usize>,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingView {
    pub index: usize,
    pub observation_id: String,
    pub schematic: Option<Schematic>,
    /// Executed grasp parameters.
    pub xi: GraspParams,
    /// Residual added to the prior.
    pub epsilon: Residual,
    pub awaiting_reward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingResponse {
    pub schema_version: u32,
    pub pending: Option<PendingView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSubmission {
    #[serde(default)]
    pub episode_index: Option<usize>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardAck {
    pub schema_version: u32,
    pub episode_index: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub index: usize,
    pub observation_id: String,
    pub reward: f64,
    pub success: bool,
    pub refit: bool,
    pub xi: GraspParams,
    pub epsilon: Residual,
}

impl From<&EpisodeRecord> for HistoryEntry {
    fn from(r: &EpisodeRecord) -> Self {
        HistoryEntry {
            index: r.index,
            observation_id: r.observation_id.clone(),
            reward: r.reward,
            success: r.success,
            refit: r.refit,
            xi: r.executed,
            epsilon: r.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPage {
    pub schema_version: u32,
    pub from: usize,
    pub total: usize,
    pub episodes: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Episode after which this distribution was in effect.
    pub index: usize,
    pub refit: bool,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSeries {
    pub schema_version: u32,
    pub initial: ResidualDistribution,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub schema_version: u32,
    pub error: String,
    pub message: String,
}

fn error(status: StatusCode, kind: &str, message: impl Into<String>) -> Response {
    let body = ApiError {
        schema_version: API_SCHEMA_VERSION,
        error: kind.into(),
        message: message.into(),
    };
    (status, Json(body)).into_response()
}

async fn session(State(h): State<SessionHandle>) -> Json<SessionState> {
    let s = h.lock();
    let done = s.records.len();
    Json(SessionState {
        schema_version: API_SCHEMA_VERSION,
        task: s.task.clone(),
        reward_mode: s.reward_mode.clone(),
        config: s.config,
        episodes_done: done,
        episodes_total: s.config.episodes,
        warmup: s.config.warmup,
        in_warmup: done < s.config.warmup,
        pending_index: s.pending.as_ref().map(|p| p.index),
        finished: s.finished,
    })
}

async fn pending(State(h): State<SessionHandle>) -> Json<PendingResponse> {
    let s = h.lock();
    let pending = s.pending.as_ref().map(|p| PendingView {
        index: p.index,
        observation_id: p.observation_id.clone(),
        schematic: p.schematic.clone(),
        xi: p.executed,
        epsilon: p.residual,
        awaiting_reward: !s.submitted,
    });
    Json(PendingResponse {
        schema_version: API_SCHEMA_VERSION,
        pending,
    })
}

async fn submit_reward(
    State(h): State<SessionHandle>,
    Path(index): Path<usize>,
    body: Result<Json<RewardSubmission>, JsonRejection>,
) -> Response {
    let Json(sub) = match body {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_body",
                e.body_text(),
            )
        }
    };
    if sub.episode_index.is_some_and(|i| i != index) {
        return error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "index_mismatch",
            "episode_index in the body differs from the path",
        );
    }
    match h.submit(index, sub.reward) {
        Ok(()) => Json(RewardAck {
            schema_version: API_SCHEMA_VERSION,
            episode_index: index,
            reward: sub.reward,
        })
        .into_response(),
        Err(SubmitError::OutOfRange) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "out_of_range",
            format!("reward must lie in [0, 1], got {}", sub.reward),
        ),
        Err(SubmitError::UnknownEpisode) => error(
            StatusCode::NOT_FOUND,
            "unknown_episode",
            format!("episode {index} is not pending"),
        ),
        Err(SubmitError::Duplicate) => error(
            StatusCode::CONFLICT,
            "duplicate",
            format!("episode {index} already has a reward"),
        ),
        Err(SubmitError::Closed) => error(
            StatusCode::SERVICE_UNAVAILABLE,
            "closed",
            "the session is not accepting rewards",
        ),
    }
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    #[serde(default)]
    from: usize,
}

async fn history(
    State(h): State<SessionHandle>,
    Query(q): Query<HistoryQuery>,
) -> Json<HistoryPage> {
    let s = h.lock();
    let episodes = s
        .records
        .iter()
        .skip(q.from)
        .map(HistoryEntry::from)
        .collect();
    Json(HistoryPage {
        schema_version: API_SCHEMA_VERSION,
        from: q.from,
        total: s.records.len(),
        episodes,
    })
}

async fn distribution(State(h): State<SessionHandle>) -> Json<DistributionSeries> {
    let s = h.lock();
    let snapshots = s
        .records
        .iter()
        .map(|r| Snapshot {
            index: r.index,
            refit: r.refit,
            mean: r.distribution.mean.to_vec(),
            std: r.distribution.std.to_vec(),
        })
        .collect();
    Json(DistributionSeries {
        schema_version: API_SCHEMA_VERSION,
        initial: s.initial,
        snapshots,
    })
}

pub fn router(handle: SessionHandle) -> Router {
    Router::new()
        .route("/api/session", get(session))
        .route("/api/episode/pending", get(pending))
        .route("/api/episode/{index}/reward", post(submit_reward))
        .route("/api/history", get(history))
        .route("/api/distribution", get(distribution))
        .with_state(handle)
}
