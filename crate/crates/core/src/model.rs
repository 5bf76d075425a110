//! Domain records held in [`State`](crate::State).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::ids::{ChannelId, EventSeq, NotificationId, PostId, Timestamp, UserId};

pub const MAX_HANDLE_LEN: usize = 32;
pub const MAX_CHANNEL_SLUG_LEN: usize = 48;
pub const MAX_BODY_CHARS: usize = 2000;
pub const EVERYONE: &str = "#everyone";

/// Validates a user handle: 1-32 chars of `[a-z0-9_-]`.
pub fn validate_handle(handle: &str) -> Result<(), CoreError> {
    let ok = !handle.is_empty()
        && handle.len() <= MAX_HANDLE_LEN
        && handle
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(CoreError::BadHandle(handle.to_owned()))
    }
}

/// Validates a channel name: `#` followed by 1-48 chars of `[a-z0-9-]`.
pub fn validate_channel_name(name: &str) -> Result<(), CoreError> {
    let ok = match name.strip_prefix('#') {
        Some(slug) => {
            !slug.is_empty()
                && slug.len() <= MAX_CHANNEL_SLUG_LEN
                && slug
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        }
        None => false,
    };
    if ok {
        Ok(())
    } else {
        Err(CoreError::BadName(name.to_owned()))
    }
}

/// Attachments are referenced by the lowercase hex SHA-256 of their bytes.
pub fn validate_blob_ref(hash: &str) -> Result<(), CoreError> {
    let ok = hash.len() == 64
        && hash
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
    if ok {
        Ok(())
    } else {
        Err(CoreError::BadAttachment(hash.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub handle: String,
    pub display_name: String,
    /// The user's single team: the people who see and curate their posts first.
    pub team_member_ids: BTreeSet<UserId>,
    /// Invites this user has sent that are not yet answered.
    pub pending_team_invites: BTreeSet<UserId>,
    pub joined_channels: BTreeSet<ChannelId>,
    pub created_at: Timestamp,
    /// Opaque login verifier; never exposed on read paths.
    pub credential: String,
    pub is_admin: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub id: ChannelId,
    pub name: String,
    pub description: String,
    pub member_ids: BTreeSet<UserId>,
    pub creator: UserId,
    pub is_everyone: bool,
    pub threshold_override: Option<u32>,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostKind {
    Original,
    Reply,
    Quote,
}

/// When and where in the log a post entered a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstRecord {
    pub at: Timestamp,
    pub seq: EventSeq,
}

/// Per-post routing state.
///
/// `votes` holds voter identities so repeat votes can be detected. It is
/// private to the engine: read paths only ever see its counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstState {
    pub(crate) votes: BTreeMap<ChannelId, BTreeSet<UserId>>,
    pub burst_into: BTreeMap<ChannelId, BurstRecord>,
    pub retracted_from: BTreeSet<ChannelId>,
}

impl BurstState {
    pub fn vote_count(&self, channel: ChannelId) -> u32 {
        self.votes.get(&channel).map_or(0, |v| v.len() as u32)
    }

    pub(crate) fn has_voted(&self, channel: ChannelId, voter: UserId) -> bool {
        self.votes.get(&channel).is_some_and(|v| v.contains(&voter))
    }

    /// Channels the post has burst into, in the order the bursts fired.
    pub fn burst_order(&self) -> Vec<ChannelId> {
        let mut order: Vec<_> = self.burst_into.iter().map(|(c, r)| (r.seq, *c)).collect();
        order.sort();
        order.into_iter().map(|(_, c)| c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: PostId,
    pub author: UserId,
    pub body: String,
    pub attachment: Option<String>,
    pub kind: PostKind,
    pub parent: Option<PostId>,
    pub quoted: Option<PostId>,
    pub suggested_channels: Vec<ChannelId>,
    pub blocked_channels: BTreeSet<ChannelId>,
    pub created_at: Timestamp,
    /// Seq of the `PostCreated` event; breaks `created_at` ties in feeds.
    pub created_seq: EventSeq,
    pub deleted: bool,
    pub burst: BurstState,
    /// emoji -> reactors. Reactions are attributed, unlike bursts.
    pub reactions: BTreeMap<String, BTreeSet<UserId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    TeamReview,
    PostBurst,
    TeamInvite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Post(PostId),
    User(UserId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: NotificationId,
    pub recipient: UserId,
    pub kind: NotificationKind,
    pub subject: Subject,
    pub created_at: Timestamp,
    /// Seq of the event that raised it; used for `since` catch-up.
    pub seq: EventSeq,
    pub acked: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handles() {
        assert!(validate_handle("xiaoling").is_ok());
        assert!(validate_handle("a_b-9").is_ok());
        assert!(validate_handle(&"a".repeat(32)).is_ok());
        assert!(validate_handle(&"a".repeat(33)).is_err());
        assert!(validate_handle("").is_err());
        assert!(validate_handle("Xiao").is_err());
        assert!(validate_handle("a b").is_err());
    }

    #[test]
    fn channel_names() {
        assert!(validate_channel_name("#stanford-hci").is_ok());
        assert!(validate_channel_name("#gto").is_ok());
        assert!(validate_channel_name(&format!("#{}", "a".repeat(48))).is_ok());
        assert!(validate_channel_name(&format!("#{}", "a".repeat(49))).is_err());
        assert!(validate_channel_name("#").is_err());
        assert!(validate_channel_name("hci").is_err());
        assert!(validate_channel_name("#ai/ml").is_err());
        assert!(validate_channel_name("#under_score").is_err());
    }

    #[test]
    fn blob_refs() {
        assert!(validate_blob_ref(&"ab".repeat(32)).is_ok());
        assert!(validate_blob_ref(&"AB".repeat(32)).is_err());
        assert!(validate_blob_ref("abc").is_err());
    }
}
