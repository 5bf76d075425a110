//! State snapshots: a cache over the log, safe to delete at any time.
//!
//! ```text
//! magic   "BSNP"
//! version u8, 3 bytes zero
//! as_of   u64 LE
//! length  u64 LE
//! crc     u32 LE   CRC-32 of the state bytes
//! state   canonical state serialization
//! ```

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use burst_core::{EventSeq, State};

use crate::{sync_dir, StoreError};

const MAGIC: &[u8; 4] = b"BSNP";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 28;
/// Snapshots kept after writing a new one.
const KEEP: usize = 2;

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 10_000;

pub fn snapshot_path(dir: &Path, as_of: EventSeq) -> PathBuf {
    dir.join(format!("{}.snap", as_of.0))
}

/// Snapshot files, newest first.
pub fn list(dir: &Path) -> Result<Vec<(EventSeq, PathBuf)>, StoreError> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        let Some(seq) = name
            .to_str()
            .and_then(|n| n.strip_suffix(".snap"))
            .and_then(|n| n.parse::<u64>().ok())
        else {
            continue;
        };
        out.push((EventSeq(seq), entry.path()));
    }
    out.sort_by_key(|s| std::cmp::Reverse(s.0));
    Ok(out)
}

pub fn encode(state: &State) -> Vec<u8> {
    let body = state.canonical_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, 0, 0, 0]);
    out.extend_from_slice(&state.last_seq().0.to_le_bytes());
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn decode(bytes: &[u8]) -> Result<State, String> {
    if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
        return Err("not a snapshot".into());
    }
    if bytes[4] != VERSION {
        return Err(format!("unknown snapshot version {}", bytes[4]));
    }
    let as_of = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let len = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let crc = u32::from_le_bytes(bytes[24..28].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if body.len() as u64 != len {
        return Err(format!("length {} but header says {len}", body.len()));
    }
    if crc32fast::hash(body) != crc {
        return Err("checksum mismatch".into());
    }
    let state = State::from_canonical_bytes(body).map_err(|e| e.to_string())?;
    if state.last_seq().0 != as_of {
        return Err(format!(
            "header as_of {as_of} but state is at {}",
            state.last_seq()
        ));
    }
    Ok(state)
}

/// Writes a snapshot atomically (temp file, fsync, rename) and prunes old ones.
pub fn write(dir: &Path, state: &State) -> Result<PathBuf, StoreError> {
    fs::create_dir_all(dir)?;
    let path = snapshot_path(dir, state.last_seq());
    let tmp = path.with_extension("snap.tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(&encode(state))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    sync_dir(dir)?;
    for (_, old) in list(dir)?.into_iter().skip(KEEP) {
        let _ = fs::remove_file(old);
    }
    Ok(path)
}

/// The newest snapshot that decodes cleanly and is not ahead of `limit`.
/// Damaged snapshots are skipped, never fatal.
pub fn load_latest(dir: &Path, limit: EventSeq) -> Result<Option<State>, StoreError> {
    for (seq, path) in list(dir)? {
        if seq > limit {
            continue;
        }
        let Ok(bytes) = fs::read(&path) else { continue };
        if let Ok(state) = decode(&bytes) {
            return Ok(Some(state));
        }
    }
    Ok(None)
}
