//! Human-readable event log lines.
//!
//! Voter identities and credentials never appear: `BurstVoteCast` shows the
//! post and channel only.

use burst_core::{Event, Timestamp};
use serde_json::Value;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

const REDACTED: &[&str] = &["voter", "credential"];

pub fn timestamp(at: Timestamp) -> String {
    OffsetDateTime::from_unix_timestamp_nanos(at.0 as i128 * 1_000_000)
        .ok()
        .and_then(|t| t.format(&Rfc3339).ok())
        .unwrap_or_else(|| format!("{}ms", at.0))
}

/// The event's fields as `key=value` pairs, redacted.
pub fn fields(ev: &Event) -> Vec<(String, String)> {
    let Ok(Value::Object(map)) = serde_json::to_value(&ev.kind) else {
        return Vec::new();
    };
    let mut out: Vec<(String, String)> = map
        .into_iter()
        .filter(|(k, _)| k != "type" && !REDACTED.contains(&k.as_str()))
        .map(|(k, v)| {
            let text = match v {
                Value::Null => "-".to_string(),
                other => other.to_string(),
            };
            (k, text)
        })
        .collect();
    out.sort();
    out
}

/// One line per event: seq, time, type, fields.
pub fn format_event(ev: &Event) -> String {
    let fields: Vec<String> = fields(ev)
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!(
        "{:>6}  {}  {:<27} {}",
        ev.seq.0,
        timestamp(ev.at),
        ev.kind.name(),
        fields.join(" ")
    )
    .trim_end()
    .to_string()
}

#[cfg(test)]
mod tests {
    use burst_core::{ChannelId, EventKind, EventSeq, PostId, UserId};

    use super::*;

    #[test]
    fn votes_hide_the_voter() {
        let ev = Event {
            seq: EventSeq(7),
            at: Timestamp(1_750_000_000_007),
            kind: EventKind::BurstVoteCast {
                post: PostId(3),
                channel: ChannelId(2),
                voter: UserId(9),
            },
        };
        assert_eq!(
            format_event(&ev),
            "     7  2025-06-15T15:06:40.007Z  BurstVoteCast               channel=2 post=3"
        );
    }

    #[test]
    fn users_hide_the_credential() {
        let ev = Event {
            seq: EventSeq(1),
            at: Timestamp(0),
            kind: EventKind::UserCreated {
                user: UserId(1),
                handle: "ana".into(),
                display_name: "Ana B".into(),
                credential: "secret-hash".into(),
                is_admin: false,
            },
        };
        let line = format_event(&ev);
        assert!(!line.contains("secret-hash"), "{line}");
        assert!(line.contains(r#"display_name="Ana B""#), "{line}");
        assert!(line.contains("1970-01-01T00:00:00Z"), "{line}");
    }
}
