use std::io::BufReader;
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::protocol::{read_message, write_message, Message, ProtocolError, PROTOCOL_VERSION};
use super::DistError;
use crate::eval::Evaluator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerConfig {
    pub worker_id: String,
    /// Consecutive failed connection attempts before giving up.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        Self {
            worker_id: format!("worker-{}", std::process::id()),
            max_attempts: 8,
            initial_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_secs(5),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub jobs: u64,
    pub failed_jobs: u64,
    pub connections: u32,
}

enum Session {
    Shutdown,
    Dropped,
}

fn serve(stream: TcpStream, evaluator: &dyn Evaluator, cfg: &WorkerConfig, stats: &mut WorkerStats) -> Result<Session, DistError> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let hello = Message::Hello {
        worker_id: cfg.worker_id.clone(),
        protocol_version: PROTOCOL_VERSION,
    };
    if write_message(&mut writer, &hello).is_err() {
        return Ok(Session::Dropped);
    }
    loop {
        let msg = match read_message(&mut reader) {
            Ok(Some(m)) => m,
            Ok(None) | Err(ProtocolError::Io(_)) | Err(ProtocolError::Truncated) => return Ok(Session::Dropped),
            Err(e) => return Err(e.into()),
        };
        let reply = match msg {
            Message::JobAssign { job_id, encoding, .. } => match evaluator.accuracy_of(&encoding) {
                Ok(accuracy) => {
                    stats.jobs += 1;
                    Message::JobResult { job_id, accuracy }
                }
                Err(e) => {
                    warn!("job {job_id} ({encoding}) failed: {e}");
                    stats.failed_jobs += 1;
                    Message::JobError {
                        job_id,
                        reason: e.to_string(),
                    }
                }
            },
            Message::Shutdown { reason } => {
                info!("shutdown requested: {reason}");
                return Ok(Session::Shutdown);
            }
            other => return Err(ProtocolError::Unexpected(format!("{other:?} sent by the master")).into()),
        };
        if write_message(&mut writer, &reply).is_err() {
            return Ok(Session::Dropped);
        }
    }
}

/// Connects to the master, evaluates assigned jobs until told to shut down,
/// and reconnects with exponential backoff when the connection drops.
pub fn worker_loop(addr: &str, evaluator: &dyn Evaluator, cfg: &WorkerConfig) -> Result<WorkerStats, DistError> {
    let mut stats = WorkerStats::default();
    let mut failures = 0u32;
    let mut backoff = cfg.initial_backoff;
    loop {
        match TcpStream::connect(addr) {
            Ok(stream) => {
                let _ = stream.set_nodelay(true);
                stats.connections += 1;
                failures = 0;
                backoff = cfg.initial_backoff;
                match serve(stream, evaluator, cfg, &mut stats)? {
                    Session::Shutdown => return Ok(stats),
                    Session::Dropped => warn!("connection to {addr} dropped; reconnecting"),
                }
            }
            Err(e) => {
                failures += 1;
                if failures >= cfg.max_attempts {
                    return Err(DistError::ConnectionFailed {
                        addr: addr.to_string(),
                        attempts: failures,
                        source: e,
                    });
                }
                thread::sleep(backoff);
                backoff = (backoff * 2).min(cfg.max_backoff);
            }
        }
    }
}
