//! Segmented append-only event log.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use burst_core::{Event, EventSeq};

use crate::record::{self, ReadError};
use crate::{sync_dir, StoreError};

pub const DEFAULT_SEGMENT_BYTES: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub first_seq: EventSeq,
    pub path: PathBuf,
}

pub fn segment_path(dir: &Path, first_seq: EventSeq) -> PathBuf {
    dir.join(format!("seg-{}.bin", first_seq.0))
}

/// Segments in the log directory, ordered by first seq.
pub fn list_segments(dir: &Path) -> Result<Vec<Segment>, StoreError> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(num) = name
            .strip_prefix("seg-")
            .and_then(|n| n.strip_suffix(".bin"))
        else {
            continue;
        };
        if let Ok(seq) = num.parse::<u64>() {
            out.push(Segment {
                first_seq: EventSeq(seq),
                path: entry.path(),
            });
        }
    }
    out.sort_by_key(|s| s.first_seq);
    Ok(out)
}

/// What recovery found at the tail of the log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recovery {
    pub last_seq: EventSeq,
    /// Bytes cut from the end of the last segment.
    pub truncated_bytes: u64,
    /// Whole records discarded with them (an unfinished batch).
    pub dropped_records: usize,
}

/// Scans one segment, returning the byte offset just past the last complete
/// batch, the last seq in it, and whether the scan stopped early.
struct Scan {
    good_len: u64,
    last_seq: Option<EventSeq>,
    dropped_records: usize,
    damage: Option<String>,
}

fn scan(seg: &Segment, expect: EventSeq) -> Result<Scan, StoreError> {
    let mut r = BufReader::new(File::open(&seg.path)?);
    let mut offset = 0u64;
    let mut scan = Scan {
        good_len: 0,
        last_seq: None,
        dropped_records: 0,
        damage: None,
    };
    let mut pending = 0usize;
    let mut next = expect;
    loop {
        match record::read(&mut r) {
            Ok(None) => break,
            Ok(Some(rec)) => {
                if rec.seq != next {
                    scan.damage = Some(format!("expected seq {next}, found {}", rec.seq));
                    break;
                }
                offset += rec.size;
                pending += 1;
                next = rec.seq.next();
                if rec.end_of_batch {
                    scan.good_len = offset;
                    scan.last_seq = Some(rec.seq);
                    pending = 0;
                }
            }
            Err(ReadError::Torn) => {
                scan.damage = Some("torn record".into());
                break;
            }
            Err(ReadError::Bad(why)) => {
                scan.damage = Some(why);
                break;
            }
            Err(ReadError::Io(e)) => return Err(e.into()),
        }
    }
    scan.dropped_records = pending;
    Ok(scan)
}

/// Validates every segment and cuts any torn or unfinished tail off the
/// last one. Damage anywhere else is an error: it cannot be a crash.
pub fn recover(dir: &Path) -> Result<Recovery, StoreError> {
    let segments = list_segments(dir)?;
    let mut rec = Recovery::default();
    let mut expect = EventSeq(1);
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if seg.first_seq != expect {
            return Err(StoreError::Corrupt {
                path: seg.path.clone(),
                reason: format!(
                    "segment starts at {} but log continues at {expect}",
                    seg.first_seq
                ),
            });
        }
        let s = scan(seg, expect)?;
        let len = fs::metadata(&seg.path)?.len();
        if s.good_len < len {
            if !last {
                return Err(StoreError::Corrupt {
                    path: seg.path.clone(),
                    reason: s.damage.unwrap_or_else(|| "unfinished batch".into()),
                });
            }
            let f = OpenOptions::new().write(true).open(&seg.path)?;
            f.set_len(s.good_len)?;
            f.sync_all()?;
            rec.truncated_bytes = len - s.good_len;
            rec.dropped_records = s.dropped_records;
        }
        if let Some(seq) = s.last_seq {
            rec.last_seq = seq;
            expect = seq.next();
        } else if !last {
            return Err(StoreError::Corrupt {
                path: seg.path.clone(),
                reason: "empty segment before the end of the log".into(),
            });
        }
    }
    Ok(rec)
}

/// Iterates events with `seq >= from`, yielding only complete batches.
/// A torn or unfinished tail on the last segment ends the iteration
/// quietly, so this is safe to run next to a live writer.
pub struct LogIter {
    segments: Vec<Segment>,
    index: usize,
    reader: Option<BufReader<File>>,
    from: EventSeq,
    expect: EventSeq,
    batch: Vec<Event>,
    ready: std::vec::IntoIter<Event>,
    done: bool,
}

impl LogIter {
    pub fn open(dir: &Path, from: EventSeq) -> Result<LogIter, StoreError> {
        let segments = list_segments(dir)?;
        // Start at the last segment whose first seq is <= from.
        let index = segments
            .iter()
            .rposition(|s| s.first_seq <= from)
            .unwrap_or(0);
        let expect = segments.get(index).map_or(EventSeq(1), |s| s.first_seq);
        Ok(LogIter {
            segments,
            index,
            reader: None,
            from,
            expect,
            batch: Vec::new(),
            ready: Vec::new().into_iter(),
            done: false,
        })
    }

    fn corrupt(&mut self, reason: String) -> Option<Result<Event, StoreError>> {
        self.done = true;
        Some(Err(StoreError::Corrupt {
            path: self.segments[self.index].path.clone(),
            reason,
        }))
    }
}

impl Iterator for LogIter {
    type Item = Result<Event, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(ev) = self.ready.next() {
                return Some(Ok(ev));
            }
            if self.done || self.index >= self.segments.len() {
                return None;
            }
            let last = self.index + 1 == self.segments.len();
            if self.reader.is_none() {
                let seg = &self.segments[self.index];
                if seg.first_seq != self.expect {
                    let reason = format!(
                        "segment starts at {}, expected {}",
                        seg.first_seq, self.expect
                    );
                    return self.corrupt(reason);
                }
                match File::open(&seg.path) {
                    Ok(f) => self.reader = Some(BufReader::new(f)),
                    Err(e) => {
                        self.done = true;
                        return Some(Err(e.into()));
                    }
                }
            }
            let reader = self.reader.as_mut().expect("opened above");
            match record::read(reader) {
                Ok(Some(rec)) => {
                    if rec.seq != self.expect {
                        let reason = format!("expected seq {}, found {}", self.expect, rec.seq);
                        return self.corrupt(reason);
                    }
                    self.expect = rec.seq.next();
                    if rec.seq >= self.from {
                        self.batch.push(rec.event);
                    }
                    if rec.end_of_batch {
                        self.ready = std::mem::take(&mut self.batch).into_iter();
                    }
                }
                Ok(None) if self.batch.is_empty() || last => {
                    if last {
                        self.done = true;
                    } else {
                        self.reader = None;
                        self.index += 1;
                    }
                }
                Ok(None) => return self.corrupt("segment ends inside a batch".into()),
                Err(ReadError::Io(e)) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                Err(_) if last => self.done = true,
                Err(ReadError::Torn) => return self.corrupt("torn record".into()),
                Err(ReadError::Bad(why)) => return self.corrupt(why),
            }
        }
    }
}

/// The single appender. Batches never straddle segments.
pub struct LogWriter {
    dir: PathBuf,
    file: File,
    len: u64,
    segment_bytes: u64,
    next_seq: EventSeq,
}

impl LogWriter {
    /// Opens for appending after `recover` has run.
    pub fn open(
        dir: &Path,
        last_seq: EventSeq,
        segment_bytes: u64,
    ) -> Result<LogWriter, StoreError> {
        let segments = list_segments(dir)?;
        let (file, len) = match segments.last() {
            Some(seg) => {
                let mut f = OpenOptions::new().append(true).open(&seg.path)?;
                let len = f.seek(SeekFrom::End(0))?;
                (f, len)
            }
            None => create_segment(dir, last_seq.next())?,
        };
        Ok(LogWriter {
            dir: dir.to_path_buf(),
            file,
            len,
            segment_bytes,
            next_seq: last_seq.next(),
        })
    }

    pub fn next_seq(&self) -> EventSeq {
        self.next_seq
    }

    /// Writes one command batch and syncs it to disk before returning.
    pub fn append(&mut self, events: &[Event]) -> Result<EventSeq, StoreError> {
        let Some(first) = events.first() else {
            return Ok(EventSeq(self.next_seq.0 - 1));
        };
        let mut expect = self.next_seq;
        for ev in events {
            if ev.seq != expect {
                return Err(StoreError::Gap {
                    expected: expect,
                    found: ev.seq,
                });
            }
            expect = expect.next();
        }
        let mut buf = Vec::new();
        for (i, ev) in events.iter().enumerate() {
            record::encode(ev, i + 1 == events.len(), &mut buf);
        }
        if self.len > 0 && self.len + buf.len() as u64 > self.segment_bytes {
            let (file, len) = create_segment(&self.dir, first.seq)?;
            self.file = file;
            self.len = len;
        }
        if let Err(e) = self
            .file
            .write_all(&buf)
            .and_then(|_| self.file.sync_data())
        {
            // Leave no partial batch behind for the next append to build on.
            let _ = self.file.set_len(self.len);
            return Err(e.into());
        }
        self.len += buf.len() as u64;
        self.next_seq = expect;
        Ok(EventSeq(expect.0 - 1))
    }
}

fn create_segment(dir: &Path, first_seq: EventSeq) -> Result<(File, u64), StoreError> {
    let path = segment_path(dir, first_seq);
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    file.sync_all()?;
    sync_dir(dir)?;
    Ok((file, 0))
}
