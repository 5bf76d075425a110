//! The folded engine state and the event fold itself.
//!
//! [`State::apply`] is the only code path that mutates state. Live command
//! execution and log replay both go through it, which is what makes
//! `fold(log) == live state` hold by construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ReplayError;
use crate::event::{Event, EventKind};
use crate::ids::{ChannelId, EventSeq, NotificationId, PostId, Timestamp, UserId};
use crate::model::{
    BurstRecord, BurstState, Channel, Notification, NotificationKind, Post, Subject, User,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    pub(crate) users: BTreeMap<UserId, User>,
    pub(crate) channels: BTreeMap<ChannelId, Channel>,
    pub(crate) posts: BTreeMap<PostId, Post>,
    pub(crate) notifications: BTreeMap<NotificationId, Notification>,
    pub(crate) handles: BTreeMap<String, UserId>,
    pub(crate) channel_names: BTreeMap<String, ChannelId>,
    pub(crate) everyone: Option<ChannelId>,
    pub(crate) last_seq: EventSeq,
    pub(crate) last_at: Timestamp,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    /// Folds a complete event sequence from empty.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a Event>) -> Result<State, ReplayError> {
        let mut state = State::new();
        for ev in events {
            state.apply(ev)?;
        }
        Ok(state)
    }

    pub fn last_seq(&self) -> EventSeq {
        self.last_seq
    }

    pub fn last_at(&self) -> Timestamp {
        self.last_at
    }

    pub fn everyone(&self) -> Option<ChannelId> {
        self.everyone
    }

    pub fn user(&self, id: UserId) -> Option<&User> {
        self.users.get(&id)
    }

    pub fn user_by_handle(&self, handle: &str) -> Option<&User> {
        self.handles.get(handle).and_then(|id| self.users.get(id))
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn channel(&self, id: ChannelId) -> Option<&Channel> {
        self.channels.get(&id)
    }

    pub fn channel_by_name(&self, name: &str) -> Option<&Channel> {
        self.channel_names
            .get(name)
            .and_then(|id| self.channels.get(id))
    }

    pub fn channels(&self) -> &BTreeMap<ChannelId, Channel> {
        &self.channels
    }

    pub fn post(&self, id: PostId) -> Option<&Post> {
        self.posts.get(&id)
    }

    pub fn posts(&self) -> impl Iterator<Item = &Post> {
        self.posts.values()
    }

    pub fn notification(&self, id: NotificationId) -> Option<&Notification> {
        self.notifications.get(&id)
    }

    pub fn notifications(&self) -> impl Iterator<Item = &Notification> {
        self.notifications.values()
    }

    pub(crate) fn next_user_id(&self) -> UserId {
        UserId(self.users.len() as u64 + 1)
    }

    pub(crate) fn next_channel_id(&self) -> ChannelId {
        ChannelId(self.channels.len() as u64 + 1)
    }

    pub(crate) fn next_post_id(&self) -> PostId {
        PostId(self.posts.len() as u64 + 1)
    }

    /// Deterministic byte form of the whole state. Every collection is
    /// ordered, so equal states serialize identically.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("state is always serializable")
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<State, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Applies one event. Fails without mutating if the event does not
    /// follow from the current state.
    pub fn apply(&mut self, ev: &Event) -> Result<(), ReplayError> {
        let expected = self.last_seq.next();
        if ev.seq != expected {
            return Err(ReplayError::OutOfOrder {
                expected,
                found: ev.seq,
            });
        }
        if ev.at < self.last_at {
            return Err(ReplayError::TimeReversal { seq: ev.seq });
        }
        self.check(ev).map_err(|reason| ReplayError::Inconsistent {
            seq: ev.seq,
            reason,
        })?;
        self.mutate(ev);
        self.last_seq = ev.seq;
        self.last_at = ev.at;
        Ok(())
    }

    fn check(&self, ev: &Event) -> Result<(), String> {
        let user = |u: &UserId| {
            self.users
                .contains_key(u)
                .then_some(())
                .ok_or_else(|| format!("unknown user {u}"))
        };
        let channel = |c: &ChannelId| {
            self.channels
                .contains_key(c)
                .then_some(())
                .ok_or_else(|| format!("unknown channel {c}"))
        };
        let post = |p: &PostId| {
            self.posts
                .contains_key(p)
                .then_some(())
                .ok_or_else(|| format!("unknown post {p}"))
        };
        match &ev.kind {
            EventKind::UserCreated { user, handle, .. } => {
                if *user != self.next_user_id() {
                    return Err(format!("user id {user} out of sequence"));
                }
                if self.handles.contains_key(handle) {
                    return Err(format!("duplicate handle {handle}"));
                }
                Ok(())
            }
            EventKind::ChannelCreated {
                channel: id,
                name,
                creator,
                is_everyone,
                ..
            } => {
                if *id != self.next_channel_id() {
                    return Err(format!("channel id {id} out of sequence"));
                }
                if self.channel_names.contains_key(name) {
                    return Err(format!("duplicate channel {name}"));
                }
                if *is_everyone && self.everyone.is_some() {
                    return Err("second #everyone".into());
                }
                user(creator)
            }
            EventKind::ChannelJoined {
                channel: c,
                user: u,
            }
            | EventKind::ChannelLeft {
                channel: c,
                user: u,
            } => {
                channel(c)?;
                user(u)
            }
            EventKind::TeamInvited { owner, invitee }
            | EventKind::TeamInviteAccepted { owner, invitee }
            | EventKind::TeamInviteDeclined { owner, invitee }
            | EventKind::TeamMemberRemoved {
                owner,
                member: invitee,
            } => {
                user(owner)?;
                user(invitee)
            }
            EventKind::PostCreated {
                post: id,
                author,
                parent,
                quoted,
                ..
            } => {
                if *id != self.next_post_id() {
                    return Err(format!("post id {id} out of sequence"));
                }
                user(author)?;
                parent.iter().chain(quoted.iter()).try_for_each(post)
            }
            EventKind::BurstVoteCast {
                post: p,
                channel: c,
                voter,
            } => {
                post(p)?;
                channel(c)?;
                user(voter)
            }
            EventKind::PostBurst {
                post: p,
                channel: c,
                ..
            }
            | EventKind::PostRetracted {
                post: p,
                channel: c,
            }
            | EventKind::ChannelBlockedRetroactively {
                post: p,
                channel: c,
            } => {
                post(p)?;
                channel(c)
            }
            EventKind::ReactionAdded {
                post: p, user: u, ..
            }
            | EventKind::ReactionRemoved {
                post: p, user: u, ..
            } => {
                post(p)?;
                user(u)
            }
            EventKind::PostDeleted { post: p } => post(p),
            EventKind::NotificationAcked { notification, .. } => self
                .notifications
                .contains_key(notification)
                .then_some(())
                .ok_or_else(|| format!("unknown notification {notification}")),
        }
    }

    fn notify(
        &mut self,
        seq: EventSeq,
        at: Timestamp,
        recipient: UserId,
        kind: NotificationKind,
        subject: Subject,
    ) {
        let id = NotificationId(self.notifications.len() as u64 + 1);
        self.notifications.insert(
            id,
            Notification {
                id,
                recipient,
                kind,
                subject,
                created_at: at,
                seq,
                acked: false,
            },
        );
    }

    fn user_mut(&mut self, id: UserId) -> &mut User {
        self.users.get_mut(&id).expect("checked")
    }

    fn post_mut(&mut self, id: PostId) -> &mut Post {
        self.posts.get_mut(&id).expect("checked")
    }

    fn mutate(&mut self, ev: &Event) {
        let at = ev.at;
        match &ev.kind {
            EventKind::UserCreated {
                user,
                handle,
                display_name,
                credential,
                is_admin,
            } => {
                let mut joined = BTreeSet::new();
                if let Some(everyone) = self.everyone {
                    joined.insert(everyone);
                    self.channels
                        .get_mut(&everyone)
                        .expect("everyone exists")
                        .member_ids
                        .insert(*user);
                }
                self.handles.insert(handle.clone(), *user);
                self.users.insert(
                    *user,
                    User {
                        id: *user,
                        handle: handle.clone(),
                        display_name: display_name.clone(),
                        team_member_ids: BTreeSet::new(),
                        pending_team_invites: BTreeSet::new(),
                        joined_channels: joined,
                        created_at: at,
                        credential: credential.clone(),
                        is_admin: *is_admin,
                    },
                );
            }
            EventKind::ChannelCreated {
                channel,
                name,
                description,
                creator,
                is_everyone,
                threshold_override,
            } => {
                let members: BTreeSet<UserId> = if *is_everyone {
                    self.users.keys().copied().collect()
                } else {
                    [*creator].into()
                };
                for m in &members {
                    self.user_mut(*m).joined_channels.insert(*channel);
                }
                if *is_everyone {
                    self.everyone = Some(*channel);
                }
                self.channel_names.insert(name.clone(), *channel);
                self.channels.insert(
                    *channel,
                    Channel {
                        id: *channel,
                        name: name.clone(),
                        description: description.clone(),
                        member_ids: members,
                        creator: *creator,
                        is_everyone: *is_everyone,
                        threshold_override: *threshold_override,
                        created_at: at,
                    },
                );
            }
            EventKind::ChannelJoined { channel, user } => {
                self.channels
                    .get_mut(channel)
                    .expect("checked")
                    .member_ids
                    .insert(*user);
                self.user_mut(*user).joined_channels.insert(*channel);
            }
            EventKind::ChannelLeft { channel, user } => {
                self.channels
                    .get_mut(channel)
                    .expect("checked")
                    .member_ids
                    .remove(user);
                self.user_mut(*user).joined_channels.remove(channel);
            }
            EventKind::TeamInvited { owner, invitee } => {
                self.user_mut(*owner).pending_team_invites.insert(*invitee);
                self.notify(
                    ev.seq,
                    at,
                    *invitee,
                    NotificationKind::TeamInvite,
                    Subject::User(*owner),
                );
            }
            EventKind::TeamInviteAccepted { owner, invitee } => {
                let owner = self.user_mut(*owner);
                owner.pending_team_invites.remove(invitee);
                owner.team_member_ids.insert(*invitee);
            }
            EventKind::TeamInviteDeclined { owner, invitee } => {
                self.user_mut(*owner).pending_team_invites.remove(invitee);
            }
            EventKind::TeamMemberRemoved { owner, member } => {
                self.user_mut(*owner).team_member_ids.remove(member);
            }
            EventKind::PostCreated {
                post,
                author,
                body,
                attachment,
                kind,
                parent,
                quoted,
                suggested,
                blocked,
            } => {
                self.posts.insert(
                    *post,
                    Post {
                        id: *post,
                        author: *author,
                        body: body.clone(),
                        attachment: attachment.clone(),
                        kind: *kind,
                        parent: *parent,
                        quoted: *quoted,
                        suggested_channels: suggested.clone(),
                        blocked_channels: blocked.clone(),
                        created_at: at,
                        created_seq: ev.seq,
                        deleted: false,
                        burst: BurstState::default(),
                        reactions: BTreeMap::new(),
                    },
                );
                let team: Vec<UserId> =
                    self.users[author].team_member_ids.iter().copied().collect();
                for member in team {
                    self.notify(
                        ev.seq,
                        at,
                        member,
                        NotificationKind::TeamReview,
                        Subject::Post(*post),
                    );
                }
            }
            EventKind::BurstVoteCast {
                post,
                channel,
                voter,
            } => {
                self.post_mut(*post)
                    .burst
                    .votes
                    .entry(*channel)
                    .or_default()
                    .insert(*voter);
            }
            EventKind::PostBurst { post, channel, .. } => {
                let p = self.post_mut(*post);
                p.burst
                    .burst_into
                    .insert(*channel, BurstRecord { at, seq: ev.seq });
                let author = p.author;
                self.notify(
                    ev.seq,
                    at,
                    author,
                    NotificationKind::PostBurst,
                    Subject::Post(*post),
                );
            }
            EventKind::PostRetracted { post, channel } => {
                let burst = &mut self.post_mut(*post).burst;
                burst.burst_into.remove(channel);
                burst.votes.remove(channel);
                burst.retracted_from.insert(*channel);
            }
            EventKind::ChannelBlockedRetroactively { post, channel } => {
                let p = self.post_mut(*post);
                p.blocked_channels.insert(*channel);
                p.suggested_channels.retain(|c| c != channel);
                p.burst.votes.remove(channel);
            }
            EventKind::ReactionAdded { post, user, emoji } => {
                self.post_mut(*post)
                    .reactions
                    .entry(emoji.clone())
                    .or_default()
                    .insert(*user);
            }
            EventKind::ReactionRemoved { post, user, emoji } => {
                let reactions = &mut self.post_mut(*post).reactions;
                if let Some(set) = reactions.get_mut(emoji) {
                    set.remove(user);
                    if set.is_empty() {
                        reactions.remove(emoji);
                    }
                }
            }
            EventKind::PostDeleted { post } => {
                self.post_mut(*post).deleted = true;
            }
            EventKind::NotificationAcked { notification, .. } => {
                if let Some(n) = self.notifications.get_mut(notification) {
                    n.acked = true;
                }
            }
        }
    }
}
