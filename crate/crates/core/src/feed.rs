//! Feed assembly.
//!
//! A feed is every live post the viewer can see, newest first by
//! `(created_at, created_seq)`, one entry per post. Replies whose parent is
//! itself in the feed are nested under that parent (oldest first) instead of
//! being listed at the top level. Pagination runs over top-level entries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::CoreError;
use crate::ids::{ChannelId, EventSeq, PostId, Timestamp, UserId};
use crate::model::{Post, PostKind, User};
use crate::view::{burst_options_for, BurstProgress, ReactionCount};

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 200;

/// Position after which the next page starts (exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeedCursor {
    pub created_at: Timestamp,
    pub seq: EventSeq,
}

impl fmt::Display for FeedCursor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.created_at.0, self.seq.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed feed cursor {0:?}")]
pub struct BadCursor(pub String);

impl FromStr for FeedCursor {
    type Err = BadCursor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadCursor(s.to_owned());
        let (at, seq) = s.split_once('.').ok_or_else(bad)?;
        Ok(FeedCursor {
            created_at: Timestamp(at.parse().map_err(|_| bad())?),
            seq: EventSeq(seq.parse().map_err(|_| bad())?),
        })
    }
}

impl Serialize for FeedCursor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeedCursor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedQuery {
    pub viewer: UserId,
    pub filter: Option<ChannelId>,
    pub cursor: Option<FeedCursor>,
    pub limit: Option<usize>,
}

impl FeedQuery {
    pub fn new(viewer: UserId) -> Self {
        FeedQuery {
            viewer,
            filter: None,
            cursor: None,
            limit: None,
        }
    }

    pub fn channel(mut self, channel: ChannelId) -> Self {
        self.filter = Some(channel);
        self
    }

    pub fn after(mut self, cursor: FeedCursor) -> Self {
        self.cursor = Some(cursor);
        self
    }

    pub fn limit(mut self, limit: usize) -> Self {
        self.limit = Some(limit);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub post: PostId,
    pub author: UserId,
    pub author_handle: String,
    pub body: String,
    pub attachment: Option<String>,
    pub kind: PostKind,
    pub quoted: Option<PostId>,
    pub created_at: Timestamp,
    /// Channels the viewer belongs to that the post has burst into.
    pub channel_tags: BTreeSet<ChannelId>,
    /// Set to the author when the viewer is on the author's team.
    pub team_banner: Option<UserId>,
    pub burst_progress: Vec<BurstProgress>,
    pub reactions: Vec<ReactionCount>,
    pub replies: Vec<FeedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedPage {
    pub entries: Vec<FeedEntry>,
    pub next_cursor: Option<FeedCursor>,
}

impl FeedPage {
    /// Every post id on the page, nested replies included.
    pub fn post_ids(&self) -> Vec<PostId> {
        fn walk(entries: &[FeedEntry], out: &mut Vec<PostId>) {
            for e in entries {
                out.push(e.post);
                walk(&e.replies, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.entries, &mut out);
        out
    }
}

fn order_key(p: &Post) -> FeedCursor {
    FeedCursor {
        created_at: p.created_at,
        seq: p.created_seq,
    }
}

impl Engine {
    pub fn assemble_feed(&self, query: &FeedQuery) -> Result<FeedPage, CoreError> {
        let state = self.state();
        let viewer = state
            .user(query.viewer)
            .ok_or(CoreError::UnknownUser(query.viewer))?;
        if let Some(f) = query.filter {
            state.channel(f).ok_or(CoreError::UnknownChannel(f))?;
            if !viewer.joined_channels.contains(&f) {
                return Err(CoreError::NotAMember {
                    user: viewer.id,
                    channel: f,
                });
            }
        }

        // Post ids are allocated in creation order, so parents are always
        // classified before their replies.
        let mut appears = BTreeSet::new();
        let mut top: Vec<&Post> = Vec::new();
        let mut children: BTreeMap<PostId, Vec<&Post>> = BTreeMap::new();
        for post in state.posts() {
            if post.deleted || !state.visible(viewer.id, post) {
                continue;
            }
            let nested_under = post
                .parent
                .filter(|p| post.kind == PostKind::Reply && appears.contains(p));
            if let Some(parent) = nested_under {
                children.entry(parent).or_default().push(post);
                appears.insert(post.id);
            } else if query
                .filter
                .is_none_or(|f| post.burst.burst_into.contains_key(&f))
            {
                top.push(post);
                appears.insert(post.id);
            }
        }

        top.sort_by_key(|p| std::cmp::Reverse(order_key(p)));
        if let Some(cursor) = query.cursor {
            top.retain(|p| order_key(p) < cursor);
        }
        let limit = query
            .limit
            .unwrap_or(DEFAULT_PAGE_SIZE)
            .clamp(1, MAX_PAGE_SIZE);
        let more = top.len() > limit;
        top.truncate(limit);

        let thresholds = self.settings().threshold.table(state.channels());
        let ctx = EntryCtx {
            engine: self,
            viewer,
            thresholds: &thresholds,
            children: &children,
        };
        let entries: Vec<FeedEntry> = top.iter().map(|p| ctx.entry(p)).collect();
        let next_cursor = if more {
            top.last().map(|p| order_key(p))
        } else {
            None
        };
        Ok(FeedPage {
            entries,
            next_cursor,
        })
    }
}

struct EntryCtx<'a> {
    engine: &'a Engine,
    viewer: &'a User,
    thresholds: &'a BTreeMap<ChannelId, u32>,
    children: &'a BTreeMap<PostId, Vec<&'a Post>>,
}

impl EntryCtx<'_> {
    fn entry(&self, post: &Post) -> FeedEntry {
        let state = self.engine.state();
        let author = state.user(post.author);
        let on_team = author.is_some_and(|a| a.team_member_ids.contains(&self.viewer.id));
        let mut replies: Vec<&Post> = self.children.get(&post.id).cloned().unwrap_or_default();
        replies.sort_by_key(|p| order_key(p));
        FeedEntry {
            post: post.id,
            author: post.author,
            author_handle: author.map(|a| a.handle.clone()).unwrap_or_default(),
            body: post.body.clone(),
            attachment: post.attachment.clone(),
            kind: post.kind,
            quoted: post.quoted,
            created_at: post.created_at,
            channel_tags: post
                .burst
                .burst_into
                .keys()
                .filter(|c| self.viewer.joined_channels.contains(c))
                .copied()
                .collect(),
            team_banner: on_team.then_some(post.author),
            burst_progress: burst_options_for(state, self.thresholds, self.viewer, post)
                .into_iter()
                .map(|o| BurstProgress {
                    channel: o.channel,
                    votes: o.votes,
                    threshold: o.threshold,
                })
                .collect(),
            reactions: post
                .reactions
                .iter()
                .map(|(emoji, users)| ReactionCount {
                    emoji: emoji.clone(),
                    count: users.len() as u32,
                    users: users.iter().copied().collect(),
                })
                .collect(),
            replies: replies.into_iter().map(|r| self.entry(r)).collect(),
        }
    }
}
