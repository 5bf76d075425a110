//! Seeded random command scripts.
//!
//! Commands are drawn with an eye on the live engine state so most of them
//! are valid (votes go to posts the voter can see, into channels they have
//! joined), with a sprinkling of invalid ones to exercise rejections.

use std::collections::BTreeSet;

use burst_core::{
    ChannelId, Command, CoreError, Engine, Event, NewPost, NotificationId, Outcome, PostId,
    PostKind, Settings, UserId, DEFAULT_EMOJI,
};
use rand::seq::{IndexedRandom, IteratorRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub max_users: usize,
    pub max_channels: usize,
    /// Commands issued after users and channels are set up.
    pub commands: usize,
    /// Chance that a channel is created by the admin with a small override.
    pub override_chance: f64,
    /// Draw team invites and answers far more often, so small worlds get
    /// teams (and with them, votes) within a few commands.
    pub team_heavy: bool,
    pub settings: Settings,
}

impl WorldConfig {
    pub fn small() -> Self {
        WorldConfig {
            max_users: 8,
            max_channels: 4,
            commands: 30,
            override_chance: 0.3,
            team_heavy: false,
            settings: Settings::default(),
        }
    }

    pub fn medium() -> Self {
        WorldConfig {
            max_users: 40,
            max_channels: 8,
            commands: 500,
            override_chance: 0.3,
            team_heavy: false,
            settings: Settings::default(),
        }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: WorldConfig,
    users: usize,
    channels: usize,
}

/// One executed command and what came of it.
pub struct Step<'a> {
    pub command: &'a Command,
    pub result: &'a Result<(Outcome, Vec<Event>), CoreError>,
    pub engine: &'a Engine,
}

impl Generator {
    pub fn new(seed: u64, cfg: WorldConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = rng.random_range(2..=cfg.max_users.max(2));
        let channels = rng.random_range(1..=cfg.max_channels.max(1));
        Generator {
            rng,
            cfg,
            users,
            channels,
        }
    }

    /// Restarts the command stream without changing the world's shape.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    /// Bootstrap, user creation and channel creation.
    pub fn setup(&mut self) -> Vec<Command> {
        let mut cmds = vec![Command::Bootstrap {
            admin_handle: "admin".into(),
            display_name: "Admin".into(),
            credential: "x".into(),
        }];
        for i in 1..self.users {
            cmds.push(Command::CreateUser {
                handle: format!("user{i}"),
                display_name: format!("User {i}"),
                credential: "x".into(),
            });
        }
        // Channel 1 is #everyone; the rest are created below.
        for i in 1..self.channels {
            let with_override = self.rng.random_bool(self.cfg.override_chance);
            let (creator, threshold_override) = if with_override {
                (UserId(1), Some(self.rng.random_range(1..=4)))
            } else {
                (UserId(self.rng.random_range(1..=self.users as u64)), None)
            };
            cmds.push(Command::CreateChannel {
                creator,
                name: format!("#ch{i}"),
                description: String::new(),
                threshold_override,
            });
        }
        cmds
    }

    fn user(&mut self) -> UserId {
        UserId(self.rng.random_range(1..=self.users as u64))
    }

    fn channel(&mut self) -> ChannelId {
        ChannelId(self.rng.random_range(1..=self.channels as u64))
    }

    fn post(&mut self, engine: &Engine) -> Option<PostId> {
        let n = engine.state().posts().count() as u64;
        (n > 0).then(|| PostId(self.rng.random_range(1..=n)))
    }

    fn visible_post(&mut self, engine: &Engine, viewer: UserId) -> Option<PostId> {
        let state = engine.state();
        state
            .posts()
            .filter(|p| state.can_view(viewer, p.id).unwrap_or(false))
            .map(|p| p.id)
            .choose(&mut self.rng)
    }

    fn joined(&mut self, engine: &Engine, user: UserId) -> Vec<ChannelId> {
        engine
            .state()
            .user(user)
            .map(|u| u.joined_channels.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Draws the next command given the current state.
    pub fn next_command(&mut self, engine: &Engine) -> Command {
        let mut roll = self.rng.random_range(0..100u32);
        if self.cfg.team_heavy {
            // Rescale onto the default table's ranges.
            roll = match roll {
                0..=9 => 0,
                10 => 15,
                11..=25 => 18,
                26..=45 => 25,
                46 => 31,
                47 => 33,
                48..=62 => 34,
                63..=90 => 48,
                91..=92 => 85,
                93 => 88,
                94..=96 => 91,
                97 => 95,
                98 => 96,
                _ => 97,
            };
        }
        match roll {
            0..=14 => Command::JoinChannel {
                user: self.user(),
                channel: self.channel(),
            },
            15..=17 => Command::LeaveChannel {
                user: self.user(),
                channel: self.channel(),
            },
            18..=24 => Command::InviteToTeam {
                owner: self.user(),
                invitee: self.user(),
            },
            25..=30 => {
                // Prefer answering an invite that exists.
                let state = engine.state();
                let pending: Vec<(UserId, UserId)> = state
                    .users()
                    .flat_map(|o| o.pending_team_invites.iter().map(move |i| (o.id, *i)))
                    .collect();
                let (owner, invitee) = pending
                    .choose(&mut self.rng)
                    .copied()
                    .unwrap_or_else(|| (self.user(), self.user()));
                if self.rng.random_bool(0.85) {
                    Command::AcceptTeamInvite { invitee, owner }
                } else {
                    Command::DeclineTeamInvite { invitee, owner }
                }
            }
            31..=32 => Command::RemoveTeamMember {
                owner: self.user(),
                member: self.user(),
            },
            33 => Command::LeaveTeam {
                member: self.user(),
                owner: self.user(),
            },
            34..=47 => {
                let author = self.user();
                let joined = self.joined(engine, author);
                let mut new = NewPost::original(author, format!("post by {author}"));
                for c in joined.iter() {
                    if self.rng.random_bool(0.3) {
                        new.suggested.push(*c);
                    }
                }
                if self.rng.random_bool(0.2) {
                    let c = self.channel();
                    new.blocked.insert(c);
                }
                if self.rng.random_bool(0.25) {
                    if let Some(parent) = self.visible_post(engine, author) {
                        if self.rng.random_bool(0.7) {
                            new.kind = PostKind::Reply;
                            new.parent = Some(parent);
                        } else {
                            new.kind = PostKind::Quote;
                            new.quoted = Some(parent);
                        }
                    }
                }
                Command::CreatePost(new)
            }
            48..=84 => {
                let voter = self.user();
                let post = if self.rng.random_bool(0.9) {
                    self.visible_post(engine, voter)
                } else {
                    self.post(engine)
                };
                let Some(post) = post else {
                    return Command::JoinChannel {
                        user: voter,
                        channel: self.channel(),
                    };
                };
                let joined = self.joined(engine, voter);
                let k = self.rng.random_range(1..=3usize);
                let mut channels: Vec<ChannelId> =
                    joined.choose_multiple(&mut self.rng, k).copied().collect();
                if self.rng.random_bool(0.1) {
                    channels.push(self.channel());
                }
                Command::CastBurst {
                    voter,
                    post,
                    channels,
                }
            }
            85..=87 => {
                let Some(post) = self.post(engine) else {
                    return Command::JoinChannel {
                        user: self.user(),
                        channel: self.channel(),
                    };
                };
                let p = engine.state().post(post).expect("exists");
                let burst: Vec<ChannelId> = p.burst.burst_into.keys().copied().collect();
                let channel = burst
                    .choose(&mut self.rng)
                    .copied()
                    .unwrap_or_else(|| self.channel());
                let author = if self.rng.random_bool(0.9) {
                    p.author
                } else {
                    self.user()
                };
                Command::RetractFromChannel {
                    author,
                    post,
                    channel,
                }
            }
            88..=90 => {
                let Some(post) = self.post(engine) else {
                    return Command::JoinChannel {
                        user: self.user(),
                        channel: self.channel(),
                    };
                };
                let author = engine.state().post(post).expect("exists").author;
                Command::BlockChannel {
                    author,
                    post,
                    channel: self.channel(),
                }
            }
            91..=94 => {
                let user = self.user();
                let Some(post) = self.visible_post(engine, user) else {
                    return Command::JoinChannel {
                        user,
                        channel: self.channel(),
                    };
                };
                let emoji = DEFAULT_EMOJI
                    .choose(&mut self.rng)
                    .expect("non-empty")
                    .to_string();
                if self.rng.random_bool(0.8) {
                    Command::AddReaction { user, post, emoji }
                } else {
                    Command::RemoveReaction { user, post, emoji }
                }
            }
            95 => {
                let Some(post) = self.post(engine) else {
                    return Command::JoinChannel {
                        user: self.user(),
                        channel: self.channel(),
                    };
                };
                let author = engine.state().post(post).expect("exists").author;
                Command::DeletePost { author, post }
            }
            96 => {
                let user = self.user();
                let n = engine.state().notifications().count() as u64;
                Command::AckNotification {
                    user,
                    notification: NotificationId(self.rng.random_range(1..=n.max(1))),
                }
            }
            _ => Command::CreateChannel {
                creator: self.user(),
                name: format!("#extra{}", self.rng.random_range(0..1000u32)),
                description: String::new(),
                threshold_override: None,
            },
        }
    }

    /// Runs setup plus `cfg.commands` random commands, calling `observe`
    /// after each one. Returns the engine, the full log and every command
    /// issued (accepted or not).
    pub fn run(mut self, mut observe: impl FnMut(Step<'_>)) -> Run {
        let mut engine = Engine::new(self.cfg.settings.clone(), burst_core::Clock::logical());
        let mut events = Vec::new();
        let mut commands = Vec::new();
        let mut accepted = 0;
        let setup = self.setup();
        let total = setup.len() + self.cfg.commands;
        let mut setup = setup.into_iter();
        for _ in 0..total {
            let cmd = match setup.next() {
                Some(c) => c,
                None => self.next_command(&engine),
            };
            let result = engine.execute(&cmd);
            if let Ok((_, evs)) = &result {
                accepted += 1;
                events.extend(evs.iter().cloned());
            }
            observe(Step {
                command: &cmd,
                result: &result,
                engine: &engine,
            });
            commands.push(cmd);
        }
        Run {
            engine,
            events,
            commands,
            accepted,
        }
    }
}

pub struct Run {
    pub engine: Engine,
    pub events: Vec<Event>,
    pub commands: Vec<Command>,
    pub accepted: usize,
}

/// Users that could legitimately vote on `post` into `channel` right now.
pub fn eligible_voters(engine: &Engine, post: PostId, channel: ChannelId) -> BTreeSet<UserId> {
    let state = engine.state();
    let Some(p) = state.post(post) else {
        return BTreeSet::new();
    };
    state
        .users()
        .filter(|u| {
            u.id != p.author
                && u.joined_channels.contains(&channel)
                && state.can_view(u.id, post).unwrap_or(false)
        })
        .map(|u| u.id)
        .collect()
}
