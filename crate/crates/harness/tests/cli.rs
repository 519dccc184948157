use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rgrasp_core::finetune::rank_elites;
use rgrasp_core::policy::{elites_from_log, PolicyFile};
use rgrasp_harness::logs::load_log;
use serde_json::{json, Value};

fn rgrasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgrasp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not a JSON error line: {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn finetune_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({
            "task": "pick-cup",
            "session": {"seed": 2},
            "policy": {"epochs": 300},
            "out_dir": "session"
        }),
    );
    let out = rgrasp(&["finetune", "--config", s(&cfg)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["episodes"], 30);
    let session = dir.path().join("session");
    let lines = std::fs::read_to_string(session.join("episodes.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 30);
    let refits: Vec<bool> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["refit"]
                .as_bool()
                .unwrap()
        })
        .collect();
    assert_eq!(refits.iter().position(|r| *r), Some(10));

    // a second run into the same directory needs --resume
    let again = rgrasp(&["finetune", "--config", s(&cfg)]);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(stderr_json(&again)["error"], "config");
    let resumed = rgrasp(&["finetune", "--config", s(&cfg), "--resume"]);
    assert!(resumed.status.success());
    assert_eq!(
        std::fs::read_to_string(session.join("episodes.jsonl")).unwrap(),
        lines
    );

    let out = rgrasp(&["train-policy", "--log", s(&session)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let weights = session.join("policy.json");
    let file = PolicyFile::load(&weights).unwrap();
    assert_eq!(file.config.epochs, 300);

    let (_, log) = load_log(&session).unwrap();
    let chosen: Vec<f64> = elites_from_log(&log, 10)
        .iter()
        .map(|e| e.residual.0[0])
        .collect();
    let ranked: Vec<f64> = rank_elites(&log, 10)
        .iter()
        .map(|&i| log.records[i].residual.0[0])
        .collect();
    assert_eq!(chosen, ranked);

    let report_path = dir.path().join("report.json");
    let out = rgrasp(&[
        "eval",
        "--config",
        s(&cfg),
        "--method",
        "finetuned",
        "--weights",
        s(&weights),
        "--seeds",
        "2,3",
        "--trials",
        "4",
        "--out",
        s(&report_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["trials"], 8);
    assert_eq!(report["method"], "finetuned");
    assert!(report["successes"].as_u64().unwrap() <= 8);
    assert_eq!(report["records"].as_array().unwrap().len(), 8);

    let out = rgrasp(&["eval", "--config", s(&cfg), "--method", "finetuned"]);
    assert_eq!(out.status.code(), Some(2), "missing weights");
    let out = rgrasp(&[
        "eval",
        "--config",
        s(&cfg),
        "--method",
        "prior-only",
        "--trials",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2), "zero trials");
    let out = rgrasp(&[
        "eval",
        "--config",
        s(&cfg),
        "--method",
        "finetuned",
        "--weights",
        "/nonexistent.json",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = rgrasp(&["replay", "--log", s(&session)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r["matches"] == true));
}

#[test]
fn short_log_cannot_train() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({"task": "stir-spoon", "session": {"episodes": 5, "warmup": 5, "elites": 5}, "out_dir": "s"}),
    );
    assert!(rgrasp(&["finetune", "--config", s(&cfg)]).status.success());
    let out = rgrasp(&["train-policy", "--log", s(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("5 episodes"));
}

#[test]
fn embedding_mode_runs_without_ui() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({"task": "open-drawer", "reward": {"mode": "embedding", "scale": 2.0}, "out_dir": "s"}),
    );
    let out = rgrasp(&["finetune", "--config", s(&cfg)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, log) = load_log(&dir.path().join("s")).unwrap();
    assert_eq!(log.records.len(), 30);
    assert!(log.records.iter().all(|r| (0.0..=1.0).contains(&r.reward)));
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        json!({"task": "pick-cup", "reward": {"mode": "psychic"}}),
    );
    let out = rgrasp(&["finetune", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("psychic"));

    let out = rgrasp(&["finetune", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curves_export_and_corrupt_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({"task": "pick-grape", "out_dir": "s"}),
    );
    assert!(rgrasp(&["finetune", "--config", s(&cfg)]).status.success());
    let session = dir.path().join("s");

    let out = rgrasp(&["export-curves", s(&session)]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 31);
    assert_eq!(
        lines[0],
        "session,episode,reward,success,reward_ma,success_ma"
    );
    let (_, log) = load_log(&session).unwrap();
    for (line, rec) in lines[1..].iter().zip(&log.records) {
        let reward: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(reward, rec.reward);
    }
    let ma5: f64 = lines[5].split(',').nth(4).unwrap().parse().unwrap();
    let expected = log.records[..5].iter().map(|r| r.reward).sum::<f64>() / 5.0;
    assert!((ma5 - expected).abs() < 1e-12);

    let episodes = session.join("episodes.jsonl");
    let text = std::fs::read_to_string(&episodes).unwrap();
    let mut broken: Vec<&str> = text.lines().collect();
    broken[6] = "{\"index\": 6, oops";
    std::fs::write(&episodes, broken.join("\n") + "\n").unwrap();
    let out = rgrasp(&["export-curves", s(&session)]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr_json(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("line 7"), "{msg}");
}
