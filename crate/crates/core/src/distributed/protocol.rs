//! Newline-delimited JSON messages exchanged between master and workers.

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::EncodedArch;

pub const PROTOCOL_VERSION: u32 = 1;
/// Longest accepted line, newline excluded.
pub const MAX_LINE_BYTES: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        worker_id: String,
        protocol_version: u32,
    },
    JobAssign {
        job_id: u64,
        encoding: EncodedArch,
        parent_encoding: Option<EncodedArch>,
    },
    JobResult {
        job_id: u64,
        accuracy: f64,
    },
    /// The worker could not evaluate the job; the master treats this as a
    /// fatal configuration mismatch.
    JobError {
        job_id: u64,
        reason: String,
    },
    Shutdown {
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("message line exceeds {MAX_LINE_BYTES} bytes")]
    LineTooLong,
    #[error("connection closed in the middle of a message")]
    Truncated,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unexpected message: {0}")]
    Unexpected(String),
    #[error("protocol version {found} is not supported (expected {PROTOCOL_VERSION})")]
    Version { found: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one message as a single JSON line and flushes.
pub fn write_message<W: Write>(out: &mut W, msg: &Message) -> io::Result<()> {
    let mut line = serde_json::to_vec(msg).map_err(io::Error::other)?;
    line.push(b'\n');
    out.write_all(&line)?;
    out.flush()
}

/// Reads the next message; `Ok(None)` on a clean end of stream.
pub fn read_message<R: BufRead>(input: &mut R) -> Result<Option<Message>, ProtocolError> {
    let mut line = Vec::new();
    let n = input.by_ref().take(MAX_LINE_BYTES as u64 + 1).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        return Err(if line.len() > MAX_LINE_BYTES {
            ProtocolError::LineTooLong
        } else {
            ProtocolError::Truncated
        });
    }
    line.pop();
    if line.last() == Some(&b'\r') {
        line.pop();
    }
    let text = std::str::from_utf8(&line).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    serde_json::from_str(text)
        .map(Some)
        .map_err(|e| ProtocolError::Malformed(e.to_string()))
}
