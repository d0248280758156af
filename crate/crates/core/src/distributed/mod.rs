//! Master/worker execution of the search: a line-oriented TCP protocol, a
//! bounded job queue owned by a single event loop, and snapshot/resume.

mod master;
pub mod protocol;
mod sequential;
mod snapshot;
mod worker;

pub use master::{master_loop, MasterConfig};
pub use protocol::{Message, ProtocolError, PROTOCOL_VERSION};
pub use sequential::{run_sequential, RunOptions, RunReport};
pub use snapshot::{decode_snapshot, encode_snapshot, load_snapshot, save_snapshot, SnapshotError, SNAPSHOT_VERSION};
pub use worker::{worker_loop, WorkerConfig, WorkerStats};

use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use crate::eval::{EvalError, Evaluator};
use crate::mcts::MctsError;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Search(#[from] MctsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("worker failed on job {job_id}: {reason}")]
    WorkerFailed { job_id: u64, reason: String },
    #[error("could not connect to {addr} after {attempts} attempts: {source}")]
    ConnectionFailed {
        addr: String,
        attempts: u32,
        #[source]
        source: std::io::Error,
    },
    #[error("no worker activity for {0:?}")]
    NoWorkers(Duration),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Starts an in-process worker thread against `addr`.
pub fn spawn_local_worker(
    addr: String,
    evaluator: Arc<dyn Evaluator>,
    cfg: WorkerConfig,
) -> JoinHandle<Result<WorkerStats, DistError>> {
    std::thread::spawn(move || worker_loop(&addr, evaluator.as_ref(), &cfg))
}
