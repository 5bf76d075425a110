use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{ChannelId, EventSeq, NotificationId, PostId, Timestamp, UserId};
use crate::model::PostKind;

/// One durable state transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: EventSeq,
    pub at: Timestamp,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    UserCreated {
        user: UserId,
        handle: String,
        display_name: String,
        credential: String,
        is_admin: bool,
    },
    ChannelCreated {
        channel: ChannelId,
        name: String,
        description: String,
        creator: UserId,
        is_everyone: bool,
        threshold_override: Option<u32>,
    },
    ChannelJoined {
        channel: ChannelId,
        user: UserId,
    },
    ChannelLeft {
        channel: ChannelId,
        user: UserId,
    },
    TeamInvited {
        owner: UserId,
        invitee: UserId,
    },
    TeamInviteAccepted {
        owner: UserId,
        invitee: UserId,
    },
    TeamInviteDeclined {
        owner: UserId,
        invitee: UserId,
    },
    /// Covers both the owner removing someone and a member leaving.
    TeamMemberRemoved {
        owner: UserId,
        member: UserId,
    },
    PostCreated {
        post: PostId,
        author: UserId,
        body: String,
        attachment: Option<String>,
        kind: PostKind,
        parent: Option<PostId>,
        quoted: Option<PostId>,
        suggested: Vec<ChannelId>,
        blocked: BTreeSet<ChannelId>,
    },
    BurstVoteCast {
        post: PostId,
        channel: ChannelId,
        voter: UserId,
    },
    /// Emitted by the engine only, in the same batch as the deciding vote.
    PostBurst {
        post: PostId,
        channel: ChannelId,
        votes: u32,
        threshold: u32,
    },
    PostRetracted {
        post: PostId,
        channel: ChannelId,
    },
    ChannelBlockedRetroactively {
        post: PostId,
        channel: ChannelId,
    },
    ReactionAdded {
        post: PostId,
        user: UserId,
        emoji: String,
    },
    ReactionRemoved {
        post: PostId,
        user: UserId,
        emoji: String,
    },
    PostDeleted {
        post: PostId,
    },
    NotificationAcked {
        notification: NotificationId,
        user: UserId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::UserCreated { .. } => "UserCreated",
            EventKind::ChannelCreated { .. } => "ChannelCreated",
            EventKind::ChannelJoined { .. } => "ChannelJoined",
            EventKind::ChannelLeft { .. } => "ChannelLeft",
            EventKind::TeamInvited { .. } => "TeamInvited",
            EventKind::TeamInviteAccepted { .. } => "TeamInviteAccepted",
            EventKind::TeamInviteDeclined { .. } => "TeamInviteDeclined",
            EventKind::TeamMemberRemoved { .. } => "TeamMemberRemoved",
            EventKind::PostCreated { .. } => "PostCreated",
            EventKind::BurstVoteCast { .. } => "BurstVoteCast",
            EventKind::PostBurst { .. } => "PostBurst",
            EventKind::PostRetracted { .. } => "PostRetracted",
            EventKind::ChannelBlockedRetroactively { .. } => "ChannelBlockedRetroactively",
            EventKind::ReactionAdded { .. } => "ReactionAdded",
            EventKind::ReactionRemoved { .. } => "ReactionRemoved",
            EventKind::PostDeleted { .. } => "PostDeleted",
            EventKind::NotificationAcked { .. } => "NotificationAcked",
        }
    }
}
