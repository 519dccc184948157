use std::path::Path;

use rgrasp_core::finetune::persist::{LogDir, SessionHeader};
use rgrasp_core::finetune::{FinetuneError, SessionLog};

use crate::config::RunConfig;
use crate::error::HarnessError;

/// Loads a session directory, naming the file in parse errors.
pub fn load_log(path: &Path) -> Result<(SessionHeader, SessionLog), HarnessError> {
    let dir = LogDir::new(path);
    dir.load().map_err(|e| match e {
        FinetuneError::Parse { line, message } => {
            let file = if line == 0 {
                dir.header_path()
            } else {
                dir.episodes_path()
            };
            HarnessError::Runtime(format!("{} line {line}: {message}", file.display()))
        }
        other => other.into(),
    })
}

/// The run configuration stored in a log header, if any.
pub fn header_config(header: &SessionHeader) -> Result<Option<RunConfig>, HarnessError> {
    if header.meta.is_null() {
        return Ok(None);
    }
    serde_json::from_value(header.meta.clone())
        .map(Some)
        .map_err(|e| HarnessError::Config(format!("run config in log header: {e}")))
}
