//! An independent re-derivation of routing state straight from the event
//! log. It shares no code with the engine's fold: plain integers, hash
//! collections, and brute-force definitions.

use std::collections::{HashMap, HashSet};

use burst_core::{Event, EventKind, ThresholdPolicy};

#[derive(Debug, Default, Clone)]
struct OraclePost {
    author: u64,
    deleted: bool,
    burst: HashSet<u64>,
    blocked: HashSet<u64>,
    retracted: HashSet<u64>,
    votes: HashMap<u64, HashSet<u64>>,
}

#[derive(Debug, Default, Clone)]
pub struct LogOracle {
    users: Vec<u64>,
    channels: Vec<u64>,
    everyone: Option<u64>,
    overrides: HashMap<u64, Option<u32>>,
    team: HashMap<u64, HashSet<u64>>,
    members: HashMap<u64, HashSet<u64>>,
    posts: HashMap<u64, OraclePost>,
    bursts_seen: usize,
}

impl LogOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn users(&self) -> &[u64] {
        &self.users
    }

    pub fn post_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.posts.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn bursts_seen(&self) -> usize {
        self.bursts_seen
    }

    pub fn is_author(&self, user: u64, post: u64) -> bool {
        self.posts.get(&post).is_some_and(|p| p.author == user)
    }

    /// Brute-force visibility: author; or live and (team member, or some
    /// channel holds both the post and the viewer).
    pub fn can_view(&self, viewer: u64, post: u64) -> bool {
        let p = &self.posts[&post];
        if viewer == p.author {
            return true;
        }
        if p.deleted {
            return false;
        }
        if self
            .team
            .get(&p.author)
            .is_some_and(|t| t.contains(&viewer))
        {
            return true;
        }
        self.channels.iter().any(|c| {
            p.burst.contains(c) && self.members.get(c).is_some_and(|m| m.contains(&viewer))
        })
    }

    fn formula(policy: &ThresholdPolicy, members: usize, everyone: bool) -> u32 {
        let micros = if everyone {
            policy.everyone_ratio().micros()
        } else {
            policy.ratio().micros()
        };
        // smallest k with k >= ratio * n
        let mut k: u64 = 0;
        while k * 1_000_000 < micros * members as u64 {
            k += 1;
        }
        let k = k.max(policy.min_threshold() as u64);
        k.min(policy.max_threshold() as u64) as u32
    }

    fn own(&self, policy: &ThresholdPolicy, c: u64) -> u32 {
        match self.overrides[&c] {
            Some(t) => t,
            None => Self::formula(
                policy,
                self.members.get(&c).map_or(0, |m| m.len()),
                Some(c) == self.everyone,
            ),
        }
    }

    pub fn threshold(&self, policy: &ThresholdPolicy, c: u64) -> u32 {
        let own = self.own(policy, c);
        if Some(c) != self.everyone {
            return own;
        }
        let mut best = 0;
        for &other in &self.channels {
            if other != c {
                best = best.max(self.own(policy, other));
            }
        }
        own.max(best + 1)
    }

    pub fn channel_ids(&self) -> &[u64] {
        &self.channels
    }

    /// Checks the event against the routing invariants, then folds it in.
    pub fn observe(&mut self, ev: &Event, policy: &ThresholdPolicy) -> Result<(), String> {
        let seq = ev.seq.0;
        match &ev.kind {
            EventKind::UserCreated { user, .. } => {
                self.users.push(user.0);
                if let Some(e) = self.everyone {
                    self.members.entry(e).or_default().insert(user.0);
                }
            }
            EventKind::ChannelCreated {
                channel,
                creator,
                is_everyone,
                threshold_override,
                ..
            } => {
                self.channels.push(channel.0);
                self.overrides.insert(channel.0, *threshold_override);
                let m = self.members.entry(channel.0).or_default();
                if *is_everyone {
                    m.extend(self.users.iter().copied());
                    self.everyone = Some(channel.0);
                } else {
                    m.insert(creator.0);
                }
            }
            EventKind::ChannelJoined { channel, user } => {
                self.members.entry(channel.0).or_default().insert(user.0);
            }
            EventKind::ChannelLeft { channel, user } => {
                self.members.entry(channel.0).or_default().remove(&user.0);
            }
            EventKind::TeamInviteAccepted { owner, invitee } => {
                self.team.entry(owner.0).or_default().insert(invitee.0);
            }
            EventKind::TeamMemberRemoved { owner, member } => {
                self.team.entry(owner.0).or_default().remove(&member.0);
            }
            EventKind::TeamInvited { .. } | EventKind::TeamInviteDeclined { .. } => {}
            EventKind::PostCreated {
                post,
                author,
                blocked,
                ..
            } => {
                self.posts.insert(
                    post.0,
                    OraclePost {
                        author: author.0,
                        blocked: blocked.iter().map(|c| c.0).collect(),
                        ..Default::default()
                    },
                );
            }
            EventKind::BurstVoteCast {
                post,
                channel,
                voter,
            } => {
                if !self.posts.contains_key(&post.0) {
                    return Err(format!("event {seq}: vote on unknown post"));
                }
                if !self
                    .members
                    .get(&channel.0)
                    .is_some_and(|m| m.contains(&voter.0))
                {
                    return Err(format!("event {seq}: voter outside the channel"));
                }
                if !self.can_view(voter.0, post.0) {
                    return Err(format!("event {seq}: voter cannot see the post"));
                }
                let p = self.posts.get_mut(&post.0).expect("checked");
                if p.author == voter.0 {
                    return Err(format!("event {seq}: author voted on own post"));
                }
                if p.blocked.contains(&channel.0)
                    || p.burst.contains(&channel.0)
                    || p.retracted.contains(&channel.0)
                {
                    return Err(format!("event {seq}: vote into closed channel"));
                }
                if !p.votes.entry(channel.0).or_default().insert(voter.0) {
                    return Err(format!("event {seq}: duplicate vote"));
                }
            }
            EventKind::PostBurst {
                post,
                channel,
                votes,
                threshold,
            } => {
                let expected = self.threshold(policy, channel.0);
                let p = self.posts.get_mut(&post.0).ok_or("burst of unknown post")?;
                let distinct = p.votes.get(&channel.0).map_or(0, |v| v.len()) as u32;
                if distinct < expected {
                    return Err(format!(
                        "event {seq}: burst with {distinct} votes under threshold {expected}"
                    ));
                }
                if *threshold != expected || *votes != distinct {
                    return Err(format!(
                        "event {seq}: recorded {votes}/{threshold}, oracle {distinct}/{expected}"
                    ));
                }
                if p.blocked.contains(&channel.0) {
                    return Err(format!("event {seq}: burst into blocked channel"));
                }
                if p.retracted.contains(&channel.0) {
                    return Err(format!("event {seq}: re-burst after retraction"));
                }
                if !p.burst.insert(channel.0) {
                    return Err(format!("event {seq}: second burst into same channel"));
                }
                self.bursts_seen += 1;
            }
            EventKind::PostRetracted { post, channel } => {
                let p = self.posts.get_mut(&post.0).ok_or("unknown post")?;
                if !p.burst.remove(&channel.0) {
                    return Err(format!("event {seq}: retract from channel never burst"));
                }
                p.votes.remove(&channel.0);
                p.retracted.insert(channel.0);
            }
            EventKind::ChannelBlockedRetroactively { post, channel } => {
                let p = self.posts.get_mut(&post.0).ok_or("unknown post")?;
                if p.burst.contains(&channel.0) {
                    return Err(format!("event {seq}: blocked a channel the post is in"));
                }
                p.votes.remove(&channel.0);
                p.blocked.insert(channel.0);
            }
            EventKind::PostDeleted { post } => {
                self.posts.get_mut(&post.0).ok_or("unknown post")?.deleted = true;
            }
            EventKind::ReactionAdded { .. }
            | EventKind::ReactionRemoved { .. }
            | EventKind::NotificationAcked { .. } => {}
        }
        Ok(())
    }

    /// Snapshot of each post's burst set, for monotonicity checks.
    /// Channels `post` is currently burst into.
    pub fn burst_set(&self, post: u64) -> HashSet<u64> {
        self.posts
            .get(&post)
            .map(|p| p.burst.clone())
            .unwrap_or_default()
    }

    pub fn burst_sets(&self) -> HashMap<u64, HashSet<u64>> {
        self.posts
            .iter()
            .map(|(id, p)| (*id, p.burst.clone()))
            .collect()
    }
}
