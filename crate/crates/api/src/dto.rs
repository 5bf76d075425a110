//! Request and response bodies that are not core view types.

use burst_core::{ChannelId, Notification, PostId, PostKind, Timestamp, UserId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateUser {
    pub handle: String,
    #[serde(default)]
    pub display_name: Option<String>,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserCreated {
    pub user_id: UserId,
    pub handle: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Login {
    pub handle: String,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub token: String,
    pub user_id: UserId,
    pub handle: String,
    pub expires_at: i64,
}

/// A channel named by id (`c3`, `3`) or by name (`#hci`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelRef(pub String);

/// A user named by id (`u3`, `3`) or by handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserRef(pub String);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatePost {
    pub body: String,
    #[serde(default)]
    pub attachment: Option<String>,
    #[serde(default = "original")]
    pub kind: PostKind,
    #[serde(default)]
    pub parent: Option<PostId>,
    #[serde(default)]
    pub quoted: Option<PostId>,
    #[serde(default)]
    pub suggested: Vec<ChannelRef>,
    #[serde(default)]
    pub blocked: Vec<ChannelRef>,
}

fn original() -> PostKind {
    PostKind::Original
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostCreated {
    pub post_id: PostId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BurstRequest {
    pub channels: Vec<ChannelRef>,
}

/// One channel's result of a burst request. `outcome` is one of
/// `progress`, `burst`, `already_voted`, `rejected:<reason>`; `votes` and
/// `threshold` accompany progress.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelResult {
    pub channel: ChannelId,
    pub name: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub votes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BurstResponse {
    pub outcomes: Vec<ChannelResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockRequest {
    pub channel: ChannelRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateChannel {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub threshold_override: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelCreated {
    pub channel_id: ChannelId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InviteRequest {
    pub invitee: UserRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Notifications {
    pub notifications: Vec<Notification>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlobStored {
    pub hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub last_seq: u64,
    pub last_at: Timestamp,
}
