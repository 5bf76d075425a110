//! Command validation and event planning.
//!
//! A command is first *prepared* against an immutable state, yielding the
//! full batch of events it would append, then *committed* by folding that
//! batch. Preparation never mutates, so a command either lands entirely or
//! not at all.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, ReplayError};
use crate::event::{Event, EventKind};
use crate::ids::{ChannelId, EventSeq, NotificationId, PostId, Timestamp, UserId};
use crate::model::{
    validate_blob_ref, validate_channel_name, validate_handle, PostKind, EVERYONE, MAX_BODY_CHARS,
};
use crate::state::State;
use crate::threshold::ThresholdPolicy;

pub const DEFAULT_MAX_TEAM_SIZE: usize = 50;
pub const DEFAULT_EMOJI: &[&str] = &["👍", "❤️", "😂", "🎉", "🤔", "👀", "🔥"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settings {
    pub threshold: ThresholdPolicy,
    /// Cap on accepted plus pending team members.
    pub max_team_size: usize,
    pub emoji_allowlist: BTreeSet<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            threshold: ThresholdPolicy::default(),
            max_team_size: DEFAULT_MAX_TEAM_SIZE,
            emoji_allowlist: DEFAULT_EMOJI.iter().map(|e| e.to_string()).collect(),
        }
    }
}

/// Source of event timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// Wall clock, clamped so time never runs backwards in the log.
    System,
    /// `epoch + seq` milliseconds. Makes whole logs reproducible.
    Logical { epoch_ms: i64 },
}

impl Clock {
    pub const DEFAULT_EPOCH_MS: i64 = 1_750_000_000_000;

    pub fn logical() -> Clock {
        Clock::Logical {
            epoch_ms: Self::DEFAULT_EPOCH_MS,
        }
    }

    pub fn stamp(&self, next_seq: EventSeq, last_at: Timestamp) -> Timestamp {
        let t = match self {
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as i64)
                .unwrap_or(0),
            Clock::Logical { epoch_ms } => epoch_ms + next_seq.0 as i64,
        };
        Timestamp(t.max(last_at.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewPost {
    pub author: UserId,
    pub body: String,
    #[serde(default)]
    pub attachment: Option<String>,
    pub kind: PostKind,
    #[serde(default)]
    pub parent: Option<PostId>,
    #[serde(default)]
    pub quoted: Option<PostId>,
    #[serde(default)]
    pub suggested: Vec<ChannelId>,
    #[serde(default)]
    pub blocked: BTreeSet<ChannelId>,
}

impl NewPost {
    pub fn original(author: UserId, body: impl Into<String>) -> Self {
        NewPost {
            author,
            body: body.into(),
            attachment: None,
            kind: PostKind::Original,
            parent: None,
            quoted: None,
            suggested: Vec::new(),
            blocked: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    /// Creates the administrator and `#everyone`. Valid once, on an empty state.
    Bootstrap {
        admin_handle: String,
        display_name: String,
        credential: String,
    },
    CreateUser {
        handle: String,
        display_name: String,
        credential: String,
    },
    CreateChannel {
        creator: UserId,
        name: String,
        description: String,
        /// Admin only.
        threshold_override: Option<u32>,
    },
    JoinChannel {
        user: UserId,
        channel: ChannelId,
    },
    LeaveChannel {
        user: UserId,
        channel: ChannelId,
    },
    InviteToTeam {
        owner: UserId,
        invitee: UserId,
    },
    AcceptTeamInvite {
        invitee: UserId,
        owner: UserId,
    },
    DeclineTeamInvite {
        invitee: UserId,
        owner: UserId,
    },
    RemoveTeamMember {
        owner: UserId,
        member: UserId,
    },
    LeaveTeam {
        member: UserId,
        owner: UserId,
    },
    CreatePost(NewPost),
    CastBurst {
        voter: UserId,
        post: PostId,
        channels: Vec<ChannelId>,
    },
    RetractFromChannel {
        author: UserId,
        post: PostId,
        channel: ChannelId,
    },
    BlockChannel {
        author: UserId,
        post: PostId,
        channel: ChannelId,
    },
    AddReaction {
        user: UserId,
        post: PostId,
        emoji: String,
    },
    RemoveReaction {
        user: UserId,
        post: PostId,
        emoji: String,
    },
    DeletePost {
        author: UserId,
        post: PostId,
    },
    AckNotification {
        user: UserId,
        notification: NotificationId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Blocked,
    AlreadyBurst,
    Retracted,
    NotMember,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Blocked => "blocked",
            RejectReason::AlreadyBurst => "already_burst",
            RejectReason::Retracted => "retracted",
            RejectReason::NotMember => "not_member",
        }
    }
}

/// Result of one vote toward one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BurstOutcome {
    Progress { votes: u32, threshold: u32 },
    Burst,
    AlreadyVoted,
    Rejected { reason: RejectReason },
}

impl fmt::Display for BurstOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BurstOutcome::Progress { votes, threshold } => {
                write!(f, "progress {votes}/{threshold}")
            }
            BurstOutcome::Burst => f.write_str("burst"),
            BurstOutcome::AlreadyVoted => f.write_str("already_voted"),
            BurstOutcome::Rejected { reason } => write!(f, "rejected:{}", reason.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelOutcome {
    pub channel: ChannelId,
    #[serde(flatten)]
    pub result: BurstOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    User(UserId),
    Channel(ChannelId),
    Post(PostId),
    Bursts(Vec<ChannelOutcome>),
    Done,
}

/// A validated command: its outcome and the events that realize it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepared {
    pub outcome: Outcome,
    pub events: Vec<Event>,
}

/// Validates `cmd` against `state` and plans its events, stamped `at`.
pub fn prepare(
    state: &State,
    settings: &Settings,
    cmd: &Command,
    at: Timestamp,
) -> Result<Prepared, CoreError> {
    let (outcome, kinds) = decide(state, settings, cmd)?;
    let mut seq = state.last_seq();
    let events = kinds
        .into_iter()
        .map(|kind| {
            seq = seq.next();
            Event { seq, at, kind }
        })
        .collect();
    Ok(Prepared { outcome, events })
}

fn require_user(state: &State, id: UserId) -> Result<&crate::model::User, CoreError> {
    state.user(id).ok_or(CoreError::UnknownUser(id))
}

fn require_channel(state: &State, id: ChannelId) -> Result<&crate::model::Channel, CoreError> {
    state.channel(id).ok_or(CoreError::UnknownChannel(id))
}

fn require_post(state: &State, id: PostId) -> Result<&crate::model::Post, CoreError> {
    state.post(id).ok_or(CoreError::UnknownPost(id))
}

fn decide(
    state: &State,
    settings: &Settings,
    cmd: &Command,
) -> Result<(Outcome, Vec<EventKind>), CoreError> {
    use Command::*;
    match cmd {
        Bootstrap {
            admin_handle,
            display_name,
            credential,
        } => {
            if state.everyone().is_some() || state.users().next().is_some() {
                return Err(CoreError::AlreadyBootstrapped);
            }
            validate_handle(admin_handle)?;
            let user = state.next_user_id();
            Ok((
                Outcome::User(user),
                vec![
                    EventKind::UserCreated {
                        user,
                        handle: admin_handle.clone(),
                        display_name: display_name.clone(),
                        credential: credential.clone(),
                        is_admin: true,
                    },
                    EventKind::ChannelCreated {
                        channel: state.next_channel_id(),
                        name: EVERYONE.to_owned(),
                        description: "Everyone on the platform".to_owned(),
                        creator: user,
                        is_everyone: true,
                        threshold_override: None,
                    },
                ],
            ))
        }
        CreateUser {
            handle,
            display_name,
            credential,
        } => {
            if state.everyone().is_none() {
                return Err(CoreError::NotBootstrapped);
            }
            validate_handle(handle)?;
            if state.user_by_handle(handle).is_some() {
                return Err(CoreError::DuplicateHandle(handle.clone()));
            }
            let user = state.next_user_id();
            Ok((
                Outcome::User(user),
                vec![EventKind::UserCreated {
                    user,
                    handle: handle.clone(),
                    display_name: display_name.clone(),
                    credential: credential.clone(),
                    is_admin: false,
                }],
            ))
        }
        CreateChannel {
            creator,
            name,
            description,
            threshold_override,
        } => {
            let creator_rec = require_user(state, *creator)?;
            if state.everyone().is_none() {
                return Err(CoreError::NotBootstrapped);
            }
            validate_channel_name(name)?;
            if state.channel_by_name(name).is_some() {
                return Err(CoreError::DuplicateName(name.clone()));
            }
            match threshold_override {
                Some(0) => return Err(CoreError::BadThresholdOverride),
                Some(_) if !creator_rec.is_admin => return Err(CoreError::NotAdmin),
                _ => {}
            }
            let channel = state.next_channel_id();
            Ok((
                Outcome::Channel(channel),
                vec![EventKind::ChannelCreated {
                    channel,
                    name: name.clone(),
                    description: description.clone(),
                    creator: *creator,
                    is_everyone: false,
                    threshold_override: *threshold_override,
                }],
            ))
        }
        JoinChannel { user, channel } => {
            let u = require_user(state, *user)?;
            require_channel(state, *channel)?;
            if u.joined_channels.contains(channel) {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::ChannelJoined {
                    channel: *channel,
                    user: *user,
                }],
            ))
        }
        LeaveChannel { user, channel } => {
            let u = require_user(state, *user)?;
            let c = require_channel(state, *channel)?;
            if c.is_everyone {
                return Err(CoreError::CannotLeaveEveryone);
            }
            if !u.joined_channels.contains(channel) {
                return Err(CoreError::NotAMember {
                    user: *user,
                    channel: *channel,
                });
            }
            Ok((
                Outcome::Done,
                vec![EventKind::ChannelLeft {
                    channel: *channel,
                    user: *user,
                }],
            ))
        }
        InviteToTeam { owner, invitee } => {
            let o = require_user(state, *owner)?;
            require_user(state, *invitee)?;
            if owner == invitee {
                return Err(CoreError::SelfInvite);
            }
            if o.team_member_ids.contains(invitee) {
                return Err(CoreError::AlreadyOnTeam {
                    owner: *owner,
                    member: *invitee,
                });
            }
            if o.pending_team_invites.contains(invitee) {
                return Err(CoreError::AlreadyInvited {
                    owner: *owner,
                    invitee: *invitee,
                });
            }
            if o.team_member_ids.len() + o.pending_team_invites.len() >= settings.max_team_size {
                return Err(CoreError::TeamFull {
                    cap: settings.max_team_size,
                });
            }
            Ok((
                Outcome::Done,
                vec![EventKind::TeamInvited {
                    owner: *owner,
                    invitee: *invitee,
                }],
            ))
        }
        AcceptTeamInvite { invitee, owner } | DeclineTeamInvite { invitee, owner } => {
            let o = require_user(state, *owner)?;
            require_user(state, *invitee)?;
            if !o.pending_team_invites.contains(invitee) {
                return Err(CoreError::NotInvited {
                    owner: *owner,
                    invitee: *invitee,
                });
            }
            let (owner, invitee) = (*owner, *invitee);
            let kind = if matches!(cmd, AcceptTeamInvite { .. }) {
                EventKind::TeamInviteAccepted { owner, invitee }
            } else {
                EventKind::TeamInviteDeclined { owner, invitee }
            };
            Ok((Outcome::Done, vec![kind]))
        }
        RemoveTeamMember { owner, member } | LeaveTeam { member, owner } => {
            let o = require_user(state, *owner)?;
            require_user(state, *member)?;
            if !o.team_member_ids.contains(member) {
                return Err(CoreError::NotTeamMember {
                    owner: *owner,
                    member: *member,
                });
            }
            Ok((
                Outcome::Done,
                vec![EventKind::TeamMemberRemoved {
                    owner: *owner,
                    member: *member,
                }],
            ))
        }
        CreatePost(new) => decide_post(state, new),
        CastBurst {
            voter,
            post,
            channels,
        } => decide_burst(state, settings, *voter, *post, channels),
        RetractFromChannel {
            author,
            post,
            channel,
        } => {
            let p = require_post(state, *post)?;
            if p.author != *author {
                return Err(CoreError::NotAuthor);
            }
            require_channel(state, *channel)?;
            if !p.burst.burst_into.contains_key(channel) {
                return Err(CoreError::NotBurstThere(*channel));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::PostRetracted {
                    post: *post,
                    channel: *channel,
                }],
            ))
        }
        BlockChannel {
            author,
            post,
            channel,
        } => {
            let p = require_post(state, *post)?;
            if p.author != *author {
                return Err(CoreError::NotAuthor);
            }
            require_channel(state, *channel)?;
            if p.burst.burst_into.contains_key(channel) {
                return Err(CoreError::AlreadyBurstUseRetract(*channel));
            }
            if p.burst.retracted_from.contains(channel) {
                return Err(CoreError::AlreadyRetracted(*channel));
            }
            if p.blocked_channels.contains(channel) {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::ChannelBlockedRetroactively {
                    post: *post,
                    channel: *channel,
                }],
            ))
        }
        AddReaction { user, post, emoji } => {
            let p = state.require_visible(*user, *post)?;
            if !settings.emoji_allowlist.contains(emoji) {
                return Err(CoreError::EmojiNotAllowed(emoji.clone()));
            }
            if p.reactions.get(emoji).is_some_and(|s| s.contains(user)) {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::ReactionAdded {
                    post: *post,
                    user: *user,
                    emoji: emoji.clone(),
                }],
            ))
        }
        RemoveReaction { user, post, emoji } => {
            let p = state.require_visible(*user, *post)?;
            if !p.reactions.get(emoji).is_some_and(|s| s.contains(user)) {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::ReactionRemoved {
                    post: *post,
                    user: *user,
                    emoji: emoji.clone(),
                }],
            ))
        }
        DeletePost { author, post } => {
            let p = require_post(state, *post)?;
            if p.author != *author {
                return Err(CoreError::NotAuthor);
            }
            if p.deleted {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((Outcome::Done, vec![EventKind::PostDeleted { post: *post }]))
        }
        AckNotification { user, notification } => {
            let n = state
                .notification(*notification)
                .filter(|n| n.recipient == *user)
                .ok_or(CoreError::UnknownNotification(*notification))?;
            if n.acked {
                return Ok((Outcome::Done, vec![]));
            }
            Ok((
                Outcome::Done,
                vec![EventKind::NotificationAcked {
                    notification: *notification,
                    user: *user,
                }],
            ))
        }
    }
}

fn decide_post(state: &State, new: &NewPost) -> Result<(Outcome, Vec<EventKind>), CoreError> {
    let author = require_user(state, new.author)?;
    if new.body.chars().count() > MAX_BODY_CHARS {
        return Err(CoreError::BodyTooLong {
            max: MAX_BODY_CHARS,
        });
    }
    if let Some(hash) = &new.attachment {
        validate_blob_ref(hash)?;
    }
    if new.body.trim().is_empty() && new.attachment.is_none() {
        return Err(CoreError::EmptyBody);
    }
    let shape_ok = match new.kind {
        PostKind::Original => new.parent.is_none() && new.quoted.is_none(),
        PostKind::Reply => new.parent.is_some() && new.quoted.is_none(),
        PostKind::Quote => new.quoted.is_some() && new.parent.is_none(),
    };
    if !shape_ok {
        return Err(CoreError::InvalidPostShape);
    }
    for target in new.parent.iter().chain(new.quoted.iter()) {
        let p = require_post(state, *target)?;
        if !state.visible(author.id, p) || p.deleted {
            return Err(CoreError::ParentNotVisible(*target));
        }
    }
    let mut suggested = Vec::with_capacity(new.suggested.len());
    for c in &new.suggested {
        require_channel(state, *c)?;
        if !author.joined_channels.contains(c) {
            return Err(CoreError::SuggestedChannelNotJoined(*c));
        }
        if !suggested.contains(c) {
            suggested.push(*c);
        }
    }
    for c in &new.blocked {
        require_channel(state, *c)?;
        if suggested.contains(c) {
            return Err(CoreError::SuggestBlockOverlap(*c));
        }
    }
    let post = state.next_post_id();
    Ok((
        Outcome::Post(post),
        vec![EventKind::PostCreated {
            post,
            author: new.author,
            body: new.body.clone(),
            attachment: new.attachment.clone(),
            kind: new.kind,
            parent: new.parent,
            quoted: new.quoted,
            suggested,
            blocked: new.blocked.clone(),
        }],
    ))
}

fn decide_burst(
    state: &State,
    settings: &Settings,
    voter: UserId,
    post: PostId,
    channels: &[ChannelId],
) -> Result<(Outcome, Vec<EventKind>), CoreError> {
    let p = state.require_visible(voter, post)?;
    if p.author == voter {
        return Err(CoreError::SelfBurst);
    }
    for c in channels {
        require_channel(state, *c)?;
    }
    let voter_rec = require_user(state, voter)?;
    let thresholds = settings.threshold.table(state.channels());
    let mut seen = BTreeSet::new();
    let mut outcomes = Vec::new();
    let mut events = Vec::new();
    for &channel in channels {
        if !seen.insert(channel) {
            continue;
        }
        let reject = if p.blocked_channels.contains(&channel) {
            Some(RejectReason::Blocked)
        } else if p.burst.burst_into.contains_key(&channel) {
            Some(RejectReason::AlreadyBurst)
        } else if p.burst.retracted_from.contains(&channel) {
            Some(RejectReason::Retracted)
        } else if !voter_rec.joined_channels.contains(&channel) {
            Some(RejectReason::NotMember)
        } else {
            None
        };
        let result = if let Some(reason) = reject {
            BurstOutcome::Rejected { reason }
        } else if p.burst.has_voted(channel, voter) {
            BurstOutcome::AlreadyVoted
        } else {
            let votes = p.burst.vote_count(channel) + 1;
            let threshold = thresholds[&channel];
            events.push(EventKind::BurstVoteCast {
                post,
                channel,
                voter,
            });
            if votes >= threshold {
                events.push(EventKind::PostBurst {
                    post,
                    channel,
                    votes,
                    threshold,
                });
                BurstOutcome::Burst
            } else {
                BurstOutcome::Progress { votes, threshold }
            }
        };
        outcomes.push(ChannelOutcome { channel, result });
    }
    Ok((Outcome::Bursts(outcomes), events))
}

/// A [`State`] bundled with the settings and clock needed to run commands.
#[derive(Debug, Clone)]
pub struct Engine {
    state: State,
    settings: Settings,
    clock: Clock,
}

impl Engine {
    pub fn new(settings: Settings, clock: Clock) -> Self {
        Engine::from_state(State::new(), settings, clock)
    }

    pub fn from_state(state: State, settings: Settings, clock: Clock) -> Self {
        Engine {
            state,
            settings,
            clock,
        }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Plans `cmd` without applying it.
    pub fn prepare(&self, cmd: &Command) -> Result<Prepared, CoreError> {
        let at = self
            .clock
            .stamp(self.state.last_seq().next(), self.state.last_at());
        prepare(&self.state, &self.settings, cmd, at)
    }

    /// Applies a prepared batch.
    pub fn commit(&mut self, events: &[Event]) -> Result<(), ReplayError> {
        for ev in events {
            self.state.apply(ev)?;
        }
        Ok(())
    }

    /// Prepares and commits in one step.
    pub fn execute(&mut self, cmd: &Command) -> Result<(Outcome, Vec<Event>), CoreError> {
        let prepared = self.prepare(cmd)?;
        self.commit(&prepared.events)
            .expect("prepared events always fold");
        Ok((prepared.outcome, prepared.events))
    }

    pub fn compute_threshold(&self, channel: ChannelId) -> Result<u32, CoreError> {
        self.settings
            .threshold
            .compute(self.state.channels(), channel)
            .ok_or(CoreError::UnknownChannel(channel))
    }

    pub fn can_view(&self, viewer: UserId, post: PostId) -> Result<bool, CoreError> {
        self.state.can_view(viewer, post)
    }
}
