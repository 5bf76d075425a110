use thiserror::Error;

use crate::ids::{ChannelId, EventSeq, NotificationId, PostId, UserId};

/// Every way a command can be refused by the engine.
///
/// [`CoreError::code`] is the stable machine-readable name used on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("unknown post {0}")]
    UnknownPost(PostId),
    #[error("unknown notification {0}")]
    UnknownNotification(NotificationId),
    #[error("handle {0:?} must be 1-32 chars of [a-z0-9_-]")]
    BadHandle(String),
    #[error("handle {0:?} is taken")]
    DuplicateHandle(String),
    #[error("channel name {0:?} must be '#' followed by 1-48 chars of [a-z0-9-]")]
    BadName(String),
    #[error("channel name {0:?} is taken")]
    DuplicateName(String),
    #[error("the system has already been bootstrapped")]
    AlreadyBootstrapped,
    #[error("the system has not been bootstrapped")]
    NotBootstrapped,
    #[error("only the administrator may do this")]
    NotAdmin,
    #[error("threshold override must be positive")]
    BadThresholdOverride,
    #[error("nobody can leave #everyone")]
    CannotLeaveEveryone,
    #[error("user {user} is not a member of {channel}")]
    NotAMember { user: UserId, channel: ChannelId },
    #[error("cannot invite yourself to your own team")]
    SelfInvite,
    #[error("team is full (cap {cap})")]
    TeamFull { cap: usize },
    #[error("{invitee} has no pending invite from {owner}")]
    NotInvited { owner: UserId, invitee: UserId },
    #[error("{invitee} already has a pending invite from {owner}")]
    AlreadyInvited { owner: UserId, invitee: UserId },
    #[error("{member} is already on {owner}'s team")]
    AlreadyOnTeam { owner: UserId, member: UserId },
    #[error("{member} is not on {owner}'s team")]
    NotTeamMember { owner: UserId, member: UserId },
    #[error("post body is empty and has no attachment")]
    EmptyBody,
    #[error("post body exceeds {max} characters")]
    BodyTooLong { max: usize },
    #[error("attachment reference {0:?} is not a hex SHA-256 digest")]
    BadAttachment(String),
    #[error("post kind does not match its parent/quoted links")]
    InvalidPostShape,
    #[error("suggested channel {0} has not been joined by the author")]
    SuggestedChannelNotJoined(ChannelId),
    #[error("channel {0} is both suggested and blocked")]
    SuggestBlockOverlap(ChannelId),
    #[error("referenced post {0} is not visible to the author")]
    ParentNotVisible(PostId),
    #[error("post {0} is not visible")]
    NotVisible(PostId),
    #[error("authors cannot burst their own posts")]
    SelfBurst,
    #[error("only the author may do this")]
    NotAuthor,
    #[error("post has not burst into {0}")]
    NotBurstThere(ChannelId),
    #[error("post already burst into {0}; retract it instead")]
    AlreadyBurstUseRetract(ChannelId),
    #[error("post was retracted from {0}")]
    AlreadyRetracted(ChannelId),
    #[error("emoji {0:?} is not allowed")]
    EmojiNotAllowed(String),
}

impl CoreError {
    /// Stable error name, mirrored by the HTTP API.
    pub fn code(&self) -> &'static str {
        use CoreError::*;
        match self {
            UnknownUser(_) => "UnknownUser",
            UnknownChannel(_) => "UnknownChannel",
            UnknownPost(_) => "UnknownPost",
            UnknownNotification(_) => "UnknownNotification",
            BadHandle(_) => "BadHandle",
            DuplicateHandle(_) => "DuplicateHandle",
            BadName(_) => "BadName",
            DuplicateName(_) => "DuplicateName",
            AlreadyBootstrapped => "AlreadyBootstrapped",
            NotBootstrapped => "NotBootstrapped",
            NotAdmin => "NotAdmin",
            BadThresholdOverride => "BadThresholdOverride",
            CannotLeaveEveryone => "CannotLeaveEveryone",
            NotAMember { .. } => "NotAMember",
            SelfInvite => "SelfInvite",
            TeamFull { .. } => "TeamFull",
            NotInvited { .. } => "NotInvited",
            AlreadyInvited { .. } => "AlreadyInvited",
            AlreadyOnTeam { .. } => "AlreadyOnTeam",
            NotTeamMember { .. } => "NotTeamMember",
            EmptyBody => "EmptyBody",
            BodyTooLong { .. } => "BodyTooLong",
            BadAttachment(_) => "BadAttachment",
            InvalidPostShape => "InvalidPostShape",
            SuggestedChannelNotJoined(_) => "SuggestedChannelNotJoined",
            SuggestBlockOverlap(_) => "SuggestBlockOverlap",
            ParentNotVisible(_) => "ParentNotVisible",
            NotVisible(_) => "NotVisible",
            SelfBurst => "SelfBurst",
            NotAuthor => "NotAuthor",
            NotBurstThere(_) => "NotBurstThere",
            AlreadyBurstUseRetract(_) => "AlreadyBurstUseRetract",
            AlreadyRetracted(_) => "AlreadyRetracted",
            EmojiNotAllowed(_) => "EmojiNotAllowed",
        }
    }
}

/// Raised when a log does not fold into a consistent state.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("expected event {expected}, found {found}")]
    OutOfOrder { expected: EventSeq, found: EventSeq },
    #[error("event {seq} goes back in time")]
    TimeReversal { seq: EventSeq },
    #[error("event {seq} is inconsistent with prior state: {reason}")]
    Inconsistent { seq: EventSeq, reason: String },
}
