use std::fmt;

use thiserror::Error;

/// Pipeline stage an error came from. Each stage has its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Order,
    Eval,
    Export,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 3,
            Stage::Order => 4,
            Stage::Eval => 5,
            Stage::Export => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Order => "order",
            Stage::Eval => "eval",
            Stage::Export => "export",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("[{stage}] {source}")]
    Library {
        stage: Stage,
        #[source]
        source: vorder::Error,
    },

    #[error("[{stage}] {message}")]
    Message { stage: Stage, message: String },
}

impl CliError {
    pub fn stage(&self) -> Stage {
        match self {
            CliError::Library { stage, .. } | CliError::Message { stage, .. } => *stage,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage().exit_code()
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Message {
            stage: Stage::Config,
            message: message.into(),
        }
    }

    pub fn at(stage: Stage, message: impl Into<String>) -> Self {
        CliError::Message {
            stage,
            message: message.into(),
        }
    }
}

/// Tags library errors with the stage that produced them.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for vorder::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|source| CliError::Library { stage, source })
    }
}

pub type CliResult<T> = Result<T, CliError>;
