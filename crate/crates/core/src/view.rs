//! Read-path projections.
//!
//! These are the only shapes that leave the engine through queries. None of
//! them carries burst-voter identities: progress is reported as counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::CoreError;
use crate::ids::{ChannelId, PostId, Timestamp, UserId};
use crate::model::{Channel, Post, PostKind, User};
use crate::state::State;

/// One row of the burst dialog: "votes/threshold" toward `channel`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstOption {
    pub channel: ChannelId,
    pub name: String,
    pub votes: u32,
    pub threshold: u32,
    pub suggested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstProgress {
    pub channel: ChannelId,
    pub votes: u32,
    pub threshold: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionCount {
    pub emoji: String,
    pub count: u32,
    pub users: Vec<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstInto {
    pub channel: ChannelId,
    pub name: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostView {
    pub id: PostId,
    pub author: UserId,
    pub author_handle: String,
    pub body: String,
    pub attachment: Option<String>,
    pub kind: PostKind,
    pub parent: Option<PostId>,
    pub quoted: Option<PostId>,
    pub suggested_channels: Vec<ChannelId>,
    pub blocked_channels: Vec<ChannelId>,
    pub created_at: Timestamp,
    pub deleted: bool,
    /// Every channel the post has reached, in the order it burst.
    pub burst_into: Vec<BurstInto>,
    pub retracted_from: Vec<ChannelId>,
    pub reactions: Vec<ReactionCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub id: ChannelId,
    pub name: String,
    pub description: String,
    pub member_count: usize,
    pub threshold: u32,
    pub is_everyone: bool,
    pub creator: UserId,
    pub joined: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSummary {
    pub id: UserId,
    pub handle: String,
    pub display_name: String,
    pub is_admin: bool,
    pub created_at: Timestamp,
}

impl From<&User> for UserSummary {
    fn from(u: &User) -> Self {
        UserSummary {
            id: u.id,
            handle: u.handle.clone(),
            display_name: u.display_name.clone(),
            is_admin: u.is_admin,
            created_at: u.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamView {
    pub members: Vec<UserSummary>,
    pub pending: Vec<UserSummary>,
    /// Owners whose teams this user is on.
    pub member_of: Vec<UserSummary>,
    /// Owners with an unanswered invite for this user.
    pub invited_by: Vec<UserSummary>,
}

pub(crate) fn burst_options_for(
    state: &State,
    thresholds: &BTreeMap<ChannelId, u32>,
    viewer: &User,
    post: &Post,
) -> Vec<BurstOption> {
    let eligible = |c: &ChannelId| {
        viewer.joined_channels.contains(c)
            && !post.blocked_channels.contains(c)
            && !post.burst.burst_into.contains_key(c)
            && !post.burst.retracted_from.contains(c)
    };
    let option = |c: ChannelId, suggested: bool| BurstOption {
        channel: c,
        name: state
            .channel(c)
            .map(|ch| ch.name.clone())
            .unwrap_or_default(),
        votes: post.burst.vote_count(c),
        threshold: thresholds[&c],
        suggested,
    };
    let mut out: Vec<BurstOption> = post
        .suggested_channels
        .iter()
        .filter(|c| eligible(c))
        .map(|&c| option(c, true))
        .collect();
    let mut rest: Vec<BurstOption> = viewer
        .joined_channels
        .iter()
        .filter(|c| eligible(c) && !post.suggested_channels.contains(c))
        .map(|&c| option(c, false))
        .collect();
    rest.sort_by(|a, b| a.name.cmp(&b.name));
    out.extend(rest);
    out
}

pub(crate) fn post_view(state: &State, post: &Post) -> PostView {
    let name = |c: ChannelId| {
        state
            .channel(c)
            .map(|ch| ch.name.clone())
            .unwrap_or_default()
    };
    PostView {
        id: post.id,
        author: post.author,
        author_handle: state
            .user(post.author)
            .map(|u| u.handle.clone())
            .unwrap_or_default(),
        body: post.body.clone(),
        attachment: post.attachment.clone(),
        kind: post.kind,
        parent: post.parent,
        quoted: post.quoted,
        suggested_channels: post.suggested_channels.clone(),
        blocked_channels: post.blocked_channels.iter().copied().collect(),
        created_at: post.created_at,
        deleted: post.deleted,
        burst_into: post
            .burst
            .burst_order()
            .into_iter()
            .map(|c| BurstInto {
                channel: c,
                name: name(c),
                at: post.burst.burst_into[&c].at,
            })
            .collect(),
        retracted_from: post.burst.retracted_from.iter().copied().collect(),
        reactions: post
            .reactions
            .iter()
            .map(|(emoji, users)| ReactionCount {
                emoji: emoji.clone(),
                count: users.len() as u32,
                users: users.iter().copied().collect(),
            })
            .collect(),
    }
}

fn summary(channel: &Channel, threshold: u32, viewer: Option<&User>) -> ChannelSummary {
    ChannelSummary {
        id: channel.id,
        name: channel.name.clone(),
        description: channel.description.clone(),
        member_count: channel.member_ids.len(),
        threshold,
        is_everyone: channel.is_everyone,
        creator: channel.creator,
        joined: viewer.is_some_and(|v| v.joined_channels.contains(&channel.id)),
    }
}

impl Engine {
    /// Channels `viewer` may nominate `post` into: suggested ones first in
    /// the poster's order, then the rest alphabetically.
    pub fn burst_options(
        &self,
        viewer: UserId,
        post: PostId,
    ) -> Result<Vec<BurstOption>, CoreError> {
        let state = self.state();
        let p = state.require_visible(viewer, post)?;
        let v = state.user(viewer).ok_or(CoreError::UnknownUser(viewer))?;
        let thresholds = self.settings().threshold.table(state.channels());
        Ok(burst_options_for(state, &thresholds, v, p))
    }

    pub fn post_view(&self, viewer: UserId, post: PostId) -> Result<PostView, CoreError> {
        let p = self.state().require_visible(viewer, post)?;
        Ok(post_view(self.state(), p))
    }

    /// The channel directory, sorted by name.
    pub fn channel_directory(&self, viewer: Option<UserId>) -> Vec<ChannelSummary> {
        let state = self.state();
        let thresholds = self.settings().threshold.table(state.channels());
        let viewer = viewer.and_then(|v| state.user(v));
        let mut out: Vec<_> = state
            .channels()
            .values()
            .map(|c| summary(c, thresholds[&c.id], viewer))
            .collect();
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }

    pub fn channel_summary(
        &self,
        channel: ChannelId,
        viewer: Option<UserId>,
    ) -> Result<ChannelSummary, CoreError> {
        let state = self.state();
        let c = state
            .channel(channel)
            .ok_or(CoreError::UnknownChannel(channel))?;
        let t = self.compute_threshold(channel)?;
        Ok(summary(c, t, viewer.and_then(|v| state.user(v))))
    }

    pub fn team_view(&self, user: UserId) -> Result<TeamView, CoreError> {
        let state = self.state();
        let u = state.user(user).ok_or(CoreError::UnknownUser(user))?;
        let summaries = |ids: &BTreeSet<UserId>| {
            ids.iter()
                .filter_map(|id| state.user(*id))
                .map(UserSummary::from)
                .collect::<Vec<_>>()
        };
        Ok(TeamView {
            members: summaries(&u.team_member_ids),
            pending: summaries(&u.pending_team_invites),
            member_of: state
                .users()
                .filter(|o| o.team_member_ids.contains(&user))
                .map(UserSummary::from)
                .collect(),
            invited_by: state
                .users()
                .filter(|o| o.pending_team_invites.contains(&user))
                .map(UserSummary::from)
                .collect(),
        })
    }
}
