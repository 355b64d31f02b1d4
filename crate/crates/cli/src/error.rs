use std::path::{Path, PathBuf};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const STAGE_FAILURE: i32 = 2;
    pub const IO: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: String, cause: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Stage { .. } => exit::STAGE_FAILURE,
            CliError::Io { .. } | CliError::MissingArtifact(_) => exit::IO,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn stage(stage: &str, cause: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage: stage.to_string(),
            cause: cause.to_string(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }

    /// Rewraps any error as a failure of `stage`.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            CliError::Stage { .. } => self,
            other => CliError::stage(stage, other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
