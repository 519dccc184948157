use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rgrasp_core::policy::{HeadKind, PolicyFile};
use serde::Serialize;

use crate::api::router;
use crate::config::{RewardMode, RunConfig};
use crate::curves::{write_curves, DEFAULT_WINDOW};
use crate::error::HarnessError;
use crate::eval::{evaluate, Method, DEFAULT_TRIALS};
use crate::finetune::{open_session, run_automatic, run_human};
use crate::live::{LiveSession, SessionHandle};
use crate::logs::{header_config, load_log};

#[derive(Debug, Parser)]
#[command(name = "rgrasp", version, about = "Residual grasp fine-tuning harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run (or resume) a fine-tuning session and log it to the output directory.
    Finetune {
        #[arg(long)]
        config: PathBuf,
        /// Continue the partial session in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Train a residual policy on the top episodes of a session log.
    TrainPolicy {
        /// Session directory.
        #[arg(long)]
        log: PathBuf,
        /// Run config whose `policy` section is used; defaults to the one in the log header.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        head: Option<HeadKind>,
        /// Weight file; defaults to `policy.json` inside the session directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count successes on fresh test placements.
    Eval(EvalArgs),
    /// Write reward and success curves of one or more sessions as CSV.
    ExportCurves {
        /// Session directories.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out every logged grasp again and compare rewards.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve the HTTP API for a session log (read-only).
    Serve {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Comma-separated session seeds; defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Policy weights, required for `finetuned`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FinetuneSummary<'a> {
    out_dir: &'a Path,
    episodes: usize,
    mean_reward_first: f64,
    mean_reward_last: f64,
    successes: usize,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, HarnessError> {
    tokio::runtime::Runtime::new()
        .map_err(|e| HarnessError::Runtime(format!("starting async runtime: {e}")))
}

fn finetune(config: &Path, resume: bool) -> Result<(), HarnessError> {
    let cfg = RunConfig::load(config)?;
    let log = match cfg.reward {
        RewardMode::Human {
            timeout_s,
            on_timeout,
        } => {
            let addr = cfg.bind_addr()?;
            let (dir, log) = open_session(&cfg, resume)?;
            let (handle, run) = run_human(&cfg, &dir, log, timeout_s, on_timeout)?;
            let rt = runtime()?;
            let listener = rt
                .block_on(tokio::net::TcpListener::bind(addr))
                .map_err(|e| HarnessError::Runtime(format!("binding {addr}: {e}")))?;
            log::info!("awaiting rewards on http://{addr}/api");
            let server = axum::serve(listener, router(handle));
            rt.spawn(async move { server.await });
            let result = run();
            rt.shutdown_background();
            result?
        }
        _ => run_automatic(&cfg, resume)?,
    };
    let rewards = log.rewards();
    let mean = |s: &[f64]| {
        if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    };
    let k = cfg.session.warmup.min(rewards.len());
    let summary = FinetuneSummary {
        out_dir: &cfg.out_dir,
        episodes: rewards.len(),
        mean_reward_first: mean(&rewards[..k]),
        mean_reward_last: mean(&rewards[rewards.len() - k..]),
        successes: log.records.iter().filter(|r| r.success).count(),
    };
    emit(
        None,
        &(serde_json::to_string(&summary).expect("summary serializes") + "\n"),
    )
}

fn train_policy(
    log_dir: &Path,
    config: Option<&Path>,
    head: Option<HeadKind>,
    out: Option<&Path>,
) -> Result<(), HarnessError> {
    let (header, log) = load_log(log_dir)?;
    let mut policy_cfg = match config {
        Some(p) => RunConfig::load(p)?.policy,
        None => header_config(&header)?
            .map(|c| c.policy)
            .unwrap_or_default(),
    };
    if let Some(h) = head {
        policy_cfg.head = h;
    }
    let file = crate::train::train_from_log(&log, &policy_cfg)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| log_dir.join("policy.json"));
    file.save(&path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<(), HarnessError> {
    let cfg = RunConfig::load(&args.config)?;
    let policy = match &args.weights {
        Some(p) => Some(PolicyFile::load(p)?.policy),
        None => None,
    };
    let seeds = if args.seeds.is_empty() {
        vec![cfg.session.seed]
    } else {
        args.seeds.clone()
    };
    let report = evaluate(
        &cfg.task()?,
        &cfg.prior_source()?,
        args.method,
        policy.as_ref(),
        args.trials,
        &seeds,
    )?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(args.out.as_deref(), &text)
}

fn export_curves(logs: &[PathBuf], window: usize, out: Option<&Path>) -> Result<(), HarnessError> {
    let mut sessions = Vec::with_capacity(logs.len());
    for path in logs {
        let (_, log) = load_log(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        sessions.push((name, log));
    }
    let mut buf = Vec::new();
    write_curves(&mut buf, &sessions, window)?;
    emit(out, &String::from_utf8(buf).expect("csv is utf-8"))
}

fn replay(log_dir: &Path, config: Option<&Path>) -> Result<(), HarnessError> {
    let (header, log) = load_log(log_dir)?;
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => header_config(&header)?.ok_or_else(|| {
            HarnessError::Config("log header has no run config; pass --config".into())
        })?,
    };
    let rows = crate::replay::replay(&cfg, &log)?;
    let mut text = String::new();
    for r in &rows {
        text += &serde_json::to_string(r).expect("row serializes");
        text.push('\n');
    }
    emit(None, &text)?;
    let bad = rows.iter().filter(|r| r.matches == Some(false)).count();
    if bad > 0 {
        return Err(HarnessError::Runtime(format!(
            "{bad} replayed rewards differ from the log"
        )));
    }
    Ok(())
}

fn serve(log_dir: &Path, bind: &str) -> Result<(), HarnessError> {
    let addr: std::net::SocketAddr = bind
        .parse()
        .map_err(|e| HarnessError::Config(format!("bind address '{bind}': {e}")))?;
    let (header, log) = load_log(log_dir)?;
    let (task, mode) = match header_config(&header)? {
        Some(c) => (c.task.clone(), c.reward.label().to_string()),
        None => (String::new(), String::new()),
    };
    let handle = SessionHandle::read_only(LiveSession::from_log(&task, &mode, &log));
    let rt = runtime()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| HarnessError::Runtime(format!("binding {addr}: {e}")))?;
        log::info!("serving {} on http://{addr}/api", log_dir.display());
        axum::serve(listener, router(handle))
            .await
            .map_err(|e| HarnessError::Runtime(format!("server: {e}")))
    })
}

pub fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Finetune { config, resume } => finetune(&config, resume),
        Command::TrainPolicy {
            log,
            config,
            head,
            out,
        } => train_policy(&log, config.as_deref(), head, out.as_deref()),
        Command::Eval(args) => eval(&args),
        Command::ExportCurves { logs, window, out } => export_curves(&logs, window, out.as_deref()),
        Command::Replay { log, config } => replay(&log, config.as_deref()),
        Command::Serve { log, bind } => serve(&log, &bind),
    }
}
