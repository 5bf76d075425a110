//! Durable storage for the burst engine.
//!
//! The event log is the only source of truth. Snapshots are caches that
//! shorten startup and may be deleted at any time. Attachments live in a
//! content-addressed blob directory.
//!
//! ```text
//! <data_dir>/
//!   LOCK
//!   log/seg-<first_seq>.bin
//!   snapshots/<seq>.snap
//!   blobs/<hh>/<sha256 hex>
//! ```

mod blob;
mod log;
pub mod record;
mod snapshot;

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use burst_core::{Event, EventSeq, ReplayError, State};

pub use blob::{hash_hex, BlobStore, MAX_BLOB_BYTES};
pub use log::{list_segments, LogIter, Recovery, Segment, DEFAULT_SEGMENT_BYTES};
pub use snapshot::DEFAULT_SNAPSHOT_EVERY;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log file {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("append out of order: expected seq {expected}, got {found}")]
    Gap { expected: EventSeq, found: EventSeq },
    #[error("log does not replay: {0}")]
    Replay(#[from] ReplayError),
    #[error("data directory {} is in use by another writer", .0.display())]
    Locked(PathBuf),
    #[error("blob of {size} bytes exceeds the {max} byte limit")]
    BlobTooLarge { size: usize, max: usize },
    #[error("not a blob hash: {0}")]
    BadBlobHash(String),
    #[error("no such blob: {0}")]
    BlobNotFound(String),
    #[error("blob {0} does not match its hash")]
    BlobCorrupt(String),
}

pub(crate) fn sync_dir(dir: &Path) -> std::io::Result<()> {
    File::open(dir)?.sync_all()
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub segment_bytes: u64,
    /// Events between automatic snapshots.
    pub snapshot_every: u64,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            segment_bytes: DEFAULT_SEGMENT_BYTES,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

/// Read-only view of a data directory. Never modifies anything, so it is
/// safe to use while a server holds the writer lock.
#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log_dir(&self) -> PathBuf {
        self.root.join("log")
    }

    pub fn snapshot_dir(&self) -> PathBuf {
        self.root.join("snapshots")
    }

    pub fn blobs(&self) -> BlobStore {
        BlobStore::new(self.root.join("blobs"))
    }

    /// Events with `seq >= from`, in order and gap-free.
    pub fn replay(&self, from: EventSeq) -> Result<LogIter, StoreError> {
        LogIter::open(&self.log_dir(), from)
    }

    /// Latest usable snapshot plus the log tail after it.
    pub fn load_state(&self) -> Result<State, StoreError> {
        self.load_state_upto(EventSeq(u64::MAX))
    }

    fn load_state_upto(&self, limit: EventSeq) -> Result<State, StoreError> {
        let mut state = snapshot::load_latest(&self.snapshot_dir(), limit)?.unwrap_or_default();
        for ev in self.replay(state.last_seq().next())? {
            state.apply(&ev?)?;
        }
        Ok(state)
    }

    /// Folds the whole log from the start, ignoring snapshots.
    pub fn replay_all(&self) -> Result<State, StoreError> {
        let mut state = State::new();
        for ev in self.replay(EventSeq(1))? {
            state.apply(&ev?)?;
        }
        Ok(state)
    }

    pub fn write_snapshot(&self, state: &State) -> Result<PathBuf, StoreError> {
        snapshot::write(&self.snapshot_dir(), state)
    }
}

/// The writable store: holds the directory lock and the single appender.
pub struct Store {
    dir: DataDir,
    opts: StoreOptions,
    writer: log::LogWriter,
    since_snapshot: u64,
    _lock: File,
}

impl Store {
    /// Opens (creating if needed) a data directory for writing. Recovery
    /// drops any torn or unfinished batch at the tail of the log.
    pub fn open(
        root: impl Into<PathBuf>,
        opts: StoreOptions,
    ) -> Result<(Store, Recovery), StoreError> {
        let dir = DataDir::new(root);
        fs::create_dir_all(dir.log_dir())?;
        fs::create_dir_all(dir.snapshot_dir())?;
        let lock_path = dir.root().join("LOCK");
        let lock = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)?;
        if lock.try_lock().is_err() {
            return Err(StoreError::Locked(dir.root().to_path_buf()));
        }
        let recovery = log::recover(&dir.log_dir())?;
        let writer = log::LogWriter::open(&dir.log_dir(), recovery.last_seq, opts.segment_bytes)?;
        Ok((
            Store {
                dir,
                opts,
                writer,
                since_snapshot: 0,
                _lock: lock,
            },
            recovery,
        ))
    }

    pub fn data_dir(&self) -> &DataDir {
        &self.dir
    }

    pub fn next_seq(&self) -> EventSeq {
        self.writer.next_seq()
    }

    /// Appends one command batch. Returns once it is on disk. The events
    /// must continue the log exactly.
    pub fn append(&mut self, events: &[Event]) -> Result<EventSeq, StoreError> {
        let last = self.writer.append(events)?;
        self.since_snapshot += events.len() as u64;
        Ok(last)
    }

    pub fn replay(&self, from: EventSeq) -> Result<LogIter, StoreError> {
        self.dir.replay(from)
    }

    /// State as of the end of the log.
    pub fn load_state(&self) -> Result<State, StoreError> {
        self.dir
            .load_state_upto(EventSeq(self.writer.next_seq().0 - 1))
    }

    pub fn snapshot_due(&self) -> bool {
        self.since_snapshot >= self.opts.snapshot_every
    }

    pub fn snapshot(&mut self, state: &State) -> Result<PathBuf, StoreError> {
        let path = self.dir.write_snapshot(state)?;
        self.since_snapshot = 0;
        Ok(path)
    }

    pub fn blobs(&self) -> BlobStore {
        self.dir.blobs()
    }
}
