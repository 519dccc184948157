//! Command-line harness: run configuration, session driving with on-disk
//! logs, policy training, evaluation, curve export, replay and the operator
//! HTTP API.

pub mod api;
pub mod cli;
pub mod config;
pub mod curves;
pub mod error;
pub mod eval;
pub mod finetune;
pub mod live;
pub mod logs;
pub mod replay;
pub mod train;

pub use config::{PriorConfig, RewardMode, RunConfig};
pub use error::HarnessError;
pub use eval::{evaluate, evaluate_seed, EvalReport, Method, TrialRecord};
