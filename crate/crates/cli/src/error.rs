use thiserror::Error;

use nasmcts::distributed::{DistError, SnapshotError};
use nasmcts::eval::EvalError;
use nasmcts::harness::HarnessError;
use nasmcts::mcts::MctsError;
use nasmcts::space::SpaceError;
use nasmcts::surrogate::SurrogateError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("evaluator mismatch: {0}")]
    Evaluator(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Evaluator(_) => 3,
            CliError::Protocol(_) => 4,
            CliError::Snapshot(_) => 5,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NotInTable(_) | EvalError::DomainMismatch => CliError::Evaluator(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MctsError> for CliError {
    fn from(e: MctsError) -> Self {
        match e {
            MctsError::Eval(inner) => inner.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if let Some(inner) = e.eval_error() {
            return match inner {
                EvalError::NotInTable(_) | EvalError::DomainMismatch => CliError::Evaluator(e.to_string()),
                _ => CliError::Config(e.to_string()),
            };
        }
        match e {
            HarnessError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Snapshot(s) => CliError::Snapshot(s.to_string()),
            DistError::Protocol(_) | DistError::ConnectionFailed { .. } | DistError::NoWorkers(_) => {
                CliError::Protocol(e.to_string())
            }
            DistError::WorkerFailed { .. } => CliError::Evaluator(e.to_string()),
            DistError::Eval(inner) => inner.into(),
            DistError::Search(inner) => inner.into(),
            DistError::Config(m) => CliError::Config(m),
            DistError::Io(io) => CliError::Io(io.to_string()),
        }
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        CliError::Snapshot(e.to_string())
    }
}
