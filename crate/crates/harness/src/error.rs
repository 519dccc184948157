use std::path::PathBuf;

use rgrasp_core::affordance::AffordanceError;
use rgrasp_core::finetune::FinetuneError;
use rgrasp_core::policy::PolicyError;
use rgrasp_core::simenv::SimError;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Finetune(#[from] FinetuneError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Affordance(#[from] AffordanceError),
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Finetune(FinetuneError::Config(_))
                | HarnessError::Policy(PolicyError::Config(_))
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            EXIT_CONFIG
        } else {
            EXIT_RUNTIME
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        let line = ErrorLine {
            error: if self.is_config() {
                "config"
            } else {
                "runtime"
            },
            exit_code: self.exit_code(),
            message: self.to_string(),
        };
        serde_json::to_string(&line).expect("error line serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_and_single_line() {
        let e = HarnessError::Config("bad\nvalue".into());
        assert_eq!(e.exit_code(), 2);
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "config");
        assert_eq!(HarnessError::Runtime("x".into()).exit_code(), 3);
        assert_eq!(
            HarnessError::Finetune(FinetuneError::Config("e".into())).exit_code(),
            2
        );
    }
}
