use std::path::{Path, PathBuf};

use serde::Serialize;

/// What an error points at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    File(PathBuf),
    Flag(String),
    None,
}

#[derive(Debug, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub subject: Subject,
    /// Usage errors exit with 2, everything else with 1.
    pub usage: bool,
}

impl CliError {
    pub fn file(path: &Path, message: impl Into<String>) -> Self {
        CliError {
            kind: "FileError".into(),
            message: message.into(),
            subject: Subject::File(path.to_path_buf()),
            usage: false,
        }
    }

    pub fn flag(flag: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: "InvalidFlag".into(),
            message: message.into(),
            subject: Subject::Flag(flag.to_string()),
            usage: false,
        }
    }

    pub fn usage(flag: &str, message: impl Into<String>) -> Self {
        CliError {
            usage: true,
            kind: "UsageError".into(),
            ..CliError::flag(flag, message)
        }
    }

    /// Attach a core error to the file that was being processed.
    pub fn core_at(path: &Path, e: uavids_core::Error) -> Self {
        let subject = match &e {
            uavids_core::Error::IoFailure { path, .. } | uavids_core::Error::CsvFailure { path, .. } => {
                Subject::File(path.clone())
            }
            _ => Subject::File(path.to_path_buf()),
        };
        CliError {
            kind: e.kind().into(),
            message: e.to_string(),
            subject,
            usage: false,
        }
    }

    pub fn core_flag(flag: &str, e: uavids_core::Error) -> Self {
        let subject = match &e {
            uavids_core::Error::IoFailure { path, .. } | uavids_core::Error::CsvFailure { path, .. } => {
                Subject::File(path.clone())
            }
            _ => Subject::Flag(flag.to_string()),
        };
        CliError {
            kind: e.kind().into(),
            message: e.to_string(),
            subject,
            usage: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.usage {
            2
        } else {
            1
        }
    }

    /// Single-line JSON for the diagnostic stream.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), self.kind.clone().into());
        obj.insert("message".into(), self.message.clone().into());
        match &self.subject {
            Subject::File(p) => {
                obj.insert("file".into(), p.display().to_string().into());
            }
            Subject::Flag(f) => {
                obj.insert("flag".into(), f.clone().into());
            }
            Subject::None => {}
        }
        serde_json::Value::Object(obj).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
