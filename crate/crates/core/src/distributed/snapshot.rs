//! Versioned, checksummed snapshots of the complete search state.
//!
//! File layout, three lines:
//!
//! ```text
//! nasmcts-snapshot <version>
//! <engine as one JSON line>
//! sha256 <hex digest of the JSON line>
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mcts::Engine;

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &str = "nasmcts-snapshot";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot format version {found} is not supported (expected {SNAPSHOT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn encode_snapshot(engine: &Engine) -> String {
    let body = serde_json::to_string(engine).expect("engine state serializes");
    let digest = Sha256::digest(body.as_bytes());
    format!("{MAGIC} {SNAPSHOT_VERSION}\n{body}\nsha256 {digest:x}\n")
}

pub fn decode_snapshot(text: &str) -> Result<Engine, SnapshotError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| SnapshotError::Corrupt(format!("bad header {header:?}")))?;
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::VersionMismatch { found: version });
    }
    let body = lines.next().ok_or_else(|| SnapshotError::Corrupt("missing body".into()))?;
    let expected = lines
        .next()
        .and_then(|l| l.strip_prefix("sha256 "))
        .ok_or_else(|| SnapshotError::Corrupt("missing checksum".into()))?;
    let actual = format!("{:x}", Sha256::digest(body.as_bytes()));
    if actual != expected.trim() {
        return Err(SnapshotError::Corrupt("checksum mismatch".into()));
    }
    serde_json::from_str(body).map_err(|e| SnapshotError::Corrupt(e.to_string()))
}

/// Writes the snapshot next to `path` and renames it into place, so a crash
/// never leaves a half-written file behind.
pub fn save_snapshot(engine: &Engine, path: &Path) -> Result<(), SnapshotError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(encode_snapshot(engine).as_bytes()).map_err(io_err(&tmp))?;
    file.sync_all().map_err(io_err(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn load_snapshot(path: &Path) -> Result<Engine, SnapshotError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    decode_snapshot(&text)
}
