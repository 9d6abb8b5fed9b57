use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed or unknown configuration content.
    Schema,
    /// Well-formed configuration that violates a physical constraint.
    Physics,
    Io,
    /// Failure while running an experiment.
    Runtime,
}

/// Error reported by the front end as one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{module}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub module: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, module: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            module: module.into(),
            message: message.into(),
            file: None,
            pointer: None,
            line: None,
            column: None,
            hint: None,
        }
    }

    pub fn from_core(e: &mbradar::Error) -> Self {
        Self::new(ErrorKind::Runtime, e.module(), e.to_string())
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, "cli", format!("{}: {e}", path.display()))
    }

    pub fn in_file(mut self, file: &str) -> Self {
        self.file = Some(file.to_string());
        self
    }

    pub fn with_hint(mut self, hint: &str) -> Self {
        self.hint = Some(hint.to_string());
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Runtime => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("error serializes")
    }
}

impl From<mbradar::Error> for CliError {
    fn from(e: mbradar::Error) -> Self {
        Self::from_core(&e)
    }
}
