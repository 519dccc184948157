//! Session logs on disk: a JSON header plus one JSON episode record per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::distribution::{ResidualDistribution, SessionConfig};
use super::session::{EpisodeRecord, SessionLog};
use super::FinetuneError;

pub const LOG_SCHEMA_VERSION: u32 = 1;
pub const HEADER_FILE: &str = "session.json";
pub const EPISODES_FILE: &str = "episodes.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub initial: ResidualDistribution,
    /// Caller-defined context (task, reward mode, run configuration).
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl SessionHeader {
    pub fn for_log(log: &SessionLog, meta: serde_json::Value) -> Self {
        SessionHeader {
            schema_version: LOG_SCHEMA_VERSION,
            config: log.config,
            initial: log.initial,
            meta,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> FinetuneError {
    FinetuneError::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

pub fn write_record<W: Write>(mut w: W, record: &EpisodeRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, record)?;
    w.write_all(b"\n")
}

/// Parses episode lines; blank lines are skipped, anything else must parse.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<EpisodeRecord>, FinetuneError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(FinetuneError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EpisodeRecord = serde_json::from_str(&line).map_err(|e| FinetuneError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Joins a header and its records, checking that indices run 0, 1, 2, ...
pub fn assemble(
    header: &SessionHeader,
    records: Vec<EpisodeRecord>,
) -> Result<SessionLog, FinetuneError> {
    if header.schema_version != LOG_SCHEMA_VERSION {
        return Err(FinetuneError::Parse {
            line: 0,
            message: format!("unsupported log schema version {}", header.schema_version),
        });
    }
    for (i, r) in records.iter().enumerate() {
        if r.index != i {
            return Err(FinetuneError::Parse {
                line: i + 1,
                message: format!("expected episode index {i}, found {}", r.index),
            });
        }
    }
    Ok(SessionLog {
        config: header.config,
        initial: header.initial,
        records,
    })
}

/// On-disk session directory.
#[derive(Debug, Clone)]
pub struct LogDir {
    pub root: PathBuf,
}

impl LogDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        LogDir { root: root.into() }
    }

    pub fn header_path(&self) -> PathBuf {
        self.root.join(HEADER_FILE)
    }

    pub fn episodes_path(&self) -> PathBuf {
        self.root.join(EPISODES_FILE)
    }

    pub fn exists(&self) -> bool {
        self.header_path().exists()
    }

    /// Creates the directory and writes the header with an empty episode file.
    pub fn create(&self, header: &SessionHeader) -> Result<(), FinetuneError> {
        std::fs::create_dir_all(&self.root).map_err(|e| io_err(&self.root, e))?;
        let path = self.header_path();
        let text = serde_json::to_string_pretty(header).expect("header serializes");
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        let ep = self.episodes_path();
        File::create(&ep).map_err(|e| io_err(&ep, e))?;
        Ok(())
    }

    pub fn read_header(&self) -> Result<SessionHeader, FinetuneError> {
        let path = self.header_path();
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| FinetuneError::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn load(&self) -> Result<(SessionHeader, SessionLog), FinetuneError> {
        let header = self.read_header()?;
        let path = self.episodes_path();
        let file = File::open(&path).map_err(|e| io_err(&path, e))?;
        let records = read_records(BufReader::new(file))?;
        let log = assemble(&header, records)?;
        Ok((header, log))
    }

    /// Appender for new episode lines; existing lines are never rewritten.
    pub fn appender(&self) -> Result<RecordAppender, FinetuneError> {
        let path = self.episodes_path();
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        Ok(RecordAppender {
            out: BufWriter::new(file),
        })
    }

    /// Writes a complete log in one go.
    pub fn save(&self, log: &SessionLog, meta: serde_json::Value) -> Result<(), FinetuneError> {
        self.create(&SessionHeader::for_log(log, meta))?;
        let mut app = self.appender()?;
        for r in &log.records {
            app.append(r).map_err(FinetuneError::Io)?;
        }
        Ok(())
    }
}

pub struct RecordAppender {
    out: BufWriter<File>,
}

impl RecordAppender {
    /// Writes and flushes one record.
    pub fn append(&mut self, record: &EpisodeRecord) -> std::io::Result<()> {
        write_record(&mut self.out, record)?;
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affordance::PriorSource;
    use crate::finetune::{run_session, OracleReward};
    use crate::seeds::Split;
    use crate::simenv::{FeatureSynth, SimEnv, Task, FEATURE_DIM};

    fn log() -> SessionLog {
        let mut env = SimEnv::new(
            Task::builtin("pour-cup").unwrap(),
            FeatureSynth::new(FEATURE_DIM, 0),
            0,
            Split::Train,
        );
        let cfg = SessionConfig {
            episodes: 12,
            ..Default::default()
        };
        run_session(&mut env, &PriorSource::task_bias(), &mut OracleReward, &cfg).unwrap()
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let d = LogDir::new(dir.path().join("s"));
        let original = log();
        d.save(&original, serde_json::json!({"task": "pour-cup"}))
            .unwrap();
        let (header, back) = d.load().unwrap();
        assert_eq!(back, original);
        assert_eq!(header.meta["task"], "pour-cup");
        let lines = std::fs::read_to_string(d.episodes_path()).unwrap();
        assert_eq!(lines.lines().count(), 12);
    }

    #[test]
    fn corrupt_line_reported() {
        let original = log();
        let mut buf = Vec::new();
        for r in &original.records[..3] {
            write_record(&mut buf, r).unwrap();
        }
        buf.extend_from_slice(b"{\"index\": 3, truncated\n");
        match read_records(buf.as_slice()) {
            Err(FinetuneError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaps_rejected() {
        let original = log();
        let header = SessionHeader::for_log(&original, serde_json::Value::Null);
        let mut records = original.records.clone();
        records.remove(4);
        assert!(matches!(
            assemble(&header, records),
            Err(FinetuneError::Parse { line: 5, .. })
        ));
        let bad = SessionHeader {
            schema_version: 99,
            ..header
        };
        assert!(assemble(&bad, vec![]).is_err());
    }
}
