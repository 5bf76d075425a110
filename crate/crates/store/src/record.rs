//! Log record framing.
//!
//! ```text
//! seq     u64 LE
//! length  u32 LE   payload byte count
//! crc     u32 LE   CRC-32 of the payload
//! payload [version u8][flags u8][event JSON]
//! ```

use std::io::{self, Read};

use burst_core::{Event, EventSeq};

pub const HEADER_LEN: usize = 16;
pub const FORMAT_VERSION: u8 = 1;
/// Set on the last record of a command batch.
pub const END_OF_BATCH: u8 = 0b0000_0001;
/// Sanity cap on a single payload; real events are a few KiB at most.
pub const MAX_PAYLOAD: u32 = 8 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub seq: EventSeq,
    pub end_of_batch: bool,
    pub event: Event,
    /// Total bytes on disk, header included.
    pub size: u64,
}

#[derive(Debug)]
pub enum ReadError {
    /// The file ended partway through a record.
    Torn,
    /// A full record was read but does not check out.
    Bad(String),
    Io(io::Error),
}

pub fn encode(event: &Event, end_of_batch: bool, out: &mut Vec<u8>) {
    let mut payload = Vec::with_capacity(256);
    payload.push(FORMAT_VERSION);
    payload.push(if end_of_batch { END_OF_BATCH } else { 0 });
    serde_json::to_writer(&mut payload, event).expect("events always serialize");
    out.extend_from_slice(&event.seq.0.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
}

/// Fills `buf` completely, or reports how many bytes were available.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

/// Reads the next record. `Ok(None)` at a clean end of file.
pub fn read(r: &mut impl Read) -> Result<Option<Record>, ReadError> {
    let mut header = [0u8; HEADER_LEN];
    match read_full(r, &mut header).map_err(ReadError::Io)? {
        0 => return Ok(None),
        HEADER_LEN => {}
        _ => return Err(ReadError::Torn),
    }
    let seq = u64::from_le_bytes(header[0..8].try_into().unwrap());
    let len = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let crc = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if !(2..=MAX_PAYLOAD).contains(&len) {
        return Err(ReadError::Bad(format!("implausible length {len}")));
    }
    let mut payload = vec![0u8; len as usize];
    if read_full(r, &mut payload).map_err(ReadError::Io)? < payload.len() {
        return Err(ReadError::Torn);
    }
    if crc32fast::hash(&payload) != crc {
        return Err(ReadError::Bad("checksum mismatch".into()));
    }
    if payload[0] != FORMAT_VERSION {
        return Err(ReadError::Bad(format!(
            "unknown record version {}",
            payload[0]
        )));
    }
    let event: Event = serde_json::from_slice(&payload[2..])
        .map_err(|e| ReadError::Bad(format!("undecodable event: {e}")))?;
    if event.seq.0 != seq {
        return Err(ReadError::Bad(format!(
            "header seq {seq} disagrees with event seq {}",
            event.seq
        )));
    }
    Ok(Some(Record {
        seq: EventSeq(seq),
        end_of_batch: payload[1] & END_OF_BATCH != 0,
        event,
        size: HEADER_LEN as u64 + len as u64,
    }))
}
