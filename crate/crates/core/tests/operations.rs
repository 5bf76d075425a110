use std::collections::BTreeSet;

use burst_core::*;

struct World {
    engine: Engine,
    admin: UserId,
    log: Vec<Event>,
}

impl World {
    fn new() -> Self {
        Self::with(Settings::default())
    }

    fn with(settings: Settings) -> Self {
        let mut engine = Engine::new(settings, Clock::logical());
        let (outcome, log) = engine
            .execute(&Command::Bootstrap {
                admin_handle: "admin".into(),
                display_name: "Admin".into(),
                credential: String::new(),
            })
            .unwrap();
        let Outcome::User(admin) = outcome else {
            panic!()
        };
        World { engine, admin, log }
    }

    fn exec(&mut self, cmd: Command) -> Result<Outcome, CoreError> {
        self.engine.execute(&cmd).map(|(o, evs)| {
            self.log.extend(evs);
            o
        })
    }

    fn user(&mut self, handle: &str) -> UserId {
        match self
            .exec(Command::CreateUser {
                handle: handle.into(),
                display_name: handle.to_uppercase(),
                credential: String::new(),
            })
            .unwrap()
        {
            Outcome::User(u) => u,
            o => panic!("{o:?}"),
        }
    }

    fn channel_by(
        &mut self,
        creator: UserId,
        name: &str,
        over: Option<u32>,
    ) -> Result<ChannelId, CoreError> {
        self.exec(Command::CreateChannel {
            creator,
            name: name.into(),
            description: String::new(),
            threshold_override: over,
        })
        .map(|o| match o {
            Outcome::Channel(c) => c,
            o => panic!("{o:?}"),
        })
    }

    fn channel(&mut self, name: &str, over: Option<u32>) -> ChannelId {
        let admin = self.admin;
        self.channel_by(admin, name, over).unwrap()
    }

    fn join(&mut self, user: UserId, channel: ChannelId) {
        self.exec(Command::JoinChannel { user, channel }).unwrap();
    }

    fn team(&mut self, owner: UserId, members: &[UserId]) {
        for &m in members {
            self.exec(Command::InviteToTeam { owner, invitee: m })
                .unwrap();
            self.exec(Command::AcceptTeamInvite { invitee: m, owner })
                .unwrap();
        }
    }

    fn post(&mut self, new: NewPost) -> Result<PostId, CoreError> {
        self.exec(Command::CreatePost(new)).map(|o| match o {
            Outcome::Post(p) => p,
            o => panic!("{o:?}"),
        })
    }

    fn burst(
        &mut self,
        voter: UserId,
        post: PostId,
        channels: &[ChannelId],
    ) -> Result<Vec<BurstOutcome>, CoreError> {
        self.exec(Command::CastBurst {
            voter,
            post,
            channels: channels.to_vec(),
        })
        .map(|o| match o {
            Outcome::Bursts(list) => list.into_iter().map(|c| c.result).collect(),
            o => panic!("{o:?}"),
        })
    }

    fn viewers(&self, post: PostId) -> BTreeSet<UserId> {
        let s = self.engine.state();
        s.users()
            .filter(|u| s.can_view(u.id, post).unwrap())
            .map(|u| u.id)
            .collect()
    }
}

fn progress(votes: u32, threshold: u32) -> BurstOutcome {
    BurstOutcome::Progress { votes, threshold }
}

fn rejected(reason: RejectReason) -> BurstOutcome {
    BurstOutcome::Rejected { reason }
}

#[test]
fn new_post_reaches_exactly_author_and_team() {
    let mut w = World::new();
    let a = w.user("author");
    let team = [w.user("b"), w.user("c"), w.user("d")];
    let _outsider = w.user("e");
    let ch = w.channel("#burst", None);
    w.join(a, ch);
    w.team(a, &team);

    let mut new = NewPost::original(a, "hello");
    new.suggested = vec![ch];
    let (outcome, events) = w.engine.execute(&Command::CreatePost(new)).unwrap();
    let Outcome::Post(post) = outcome else {
        panic!()
    };

    let expected: BTreeSet<UserId> = [a, team[0], team[1], team[2]].into();
    assert_eq!(w.viewers(post), expected);
    assert!(w
        .engine
        .state()
        .post(post)
        .unwrap()
        .burst
        .burst_into
        .is_empty());
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind.name(), "PostCreated");

    let reviews: BTreeSet<UserId> = w
        .engine
        .state()
        .notifications()
        .filter(|n| n.kind == NotificationKind::TeamReview && n.subject == Subject::Post(post))
        .map(|n| n.recipient)
        .collect();
    assert_eq!(reviews, team.into());
}

#[test]
fn create_post_validation() {
    let mut w = World::new();
    let a = w.user("author");
    let b = w.user("b");
    let x = w.channel("#x", None);
    let y = w.channel("#y", None);
    w.join(a, x);

    let mut overlap = NewPost::original(a, "hi");
    overlap.suggested = vec![x];
    overlap.blocked = [x].into();
    assert_eq!(w.post(overlap), Err(CoreError::SuggestBlockOverlap(x)));

    let mut not_joined = NewPost::original(a, "hi");
    not_joined.suggested = vec![y];
    assert_eq!(
        w.post(not_joined),
        Err(CoreError::SuggestedChannelNotJoined(y))
    );

    assert_eq!(
        w.post(NewPost::original(a, "  ")),
        Err(CoreError::EmptyBody)
    );
    assert_eq!(
        w.post(NewPost::original(a, "x".repeat(MAX_BODY_CHARS + 1))),
        Err(CoreError::BodyTooLong {
            max: MAX_BODY_CHARS
        })
    );
    assert!(w
        .post(NewPost::original(a, "é".repeat(MAX_BODY_CHARS)))
        .is_ok());

    let mut attachment_only = NewPost::original(a, "");
    attachment_only.attachment = Some("0f".repeat(32));
    assert!(w.post(attachment_only).is_ok());

    let mut bad_shape = NewPost::original(a, "reply without parent");
    bad_shape.kind = PostKind::Reply;
    assert_eq!(w.post(bad_shape), Err(CoreError::InvalidPostShape));

    assert_eq!(
        w.post(NewPost::original(UserId(99), "ghost")),
        Err(CoreError::UnknownUser(UserId(99)))
    );

    // b cannot see a's team post, so cannot reply to or quote it.
    let hidden = w.post(NewPost::original(a, "team only")).unwrap();
    let mut reply = NewPost::original(b, "re");
    reply.kind = PostKind::Reply;
    reply.parent = Some(hidden);
    assert_eq!(w.post(reply), Err(CoreError::ParentNotVisible(hidden)));
    let mut quote = NewPost::original(b, "qt");
    quote.kind = PostKind::Quote;
    quote.quoted = Some(hidden);
    assert_eq!(w.post(quote), Err(CoreError::ParentNotVisible(hidden)));
}

#[test]
fn duplicate_suggestions_are_collapsed() {
    let mut w = World::new();
    let a = w.user("a");
    let x = w.channel("#x", None);
    w.join(a, x);
    let mut new = NewPost::original(a, "hi");
    new.suggested = vec![x, x];
    let p = w.post(new).unwrap();
    assert_eq!(
        w.engine.state().post(p).unwrap().suggested_channels,
        vec![x]
    );
}

#[test]
fn can_view_rules() {
    let mut w = World::new();
    let a = w.user("a");
    let t = w.user("t");
    let v = w.user("v");
    let o = w.user("outsider");
    let cscw = w.channel("#cscw", Some(1));
    w.join(t, cscw);
    w.team(a, &[t]);

    let p = w.post(NewPost::original(a, "idea")).unwrap();
    assert!(
        w.engine.can_view(t, p).unwrap(),
        "team member sees zero-burst post"
    );
    assert!(
        !w.engine.can_view(o, p).unwrap(),
        "no shared channel, not on team"
    );

    assert_eq!(w.burst(t, p, &[cscw]).unwrap(), vec![BurstOutcome::Burst]);
    assert!(!w.engine.can_view(v, p).unwrap());
    w.join(v, cscw);
    assert!(
        w.engine.can_view(v, p).unwrap(),
        "joining after the burst grants visibility"
    );

    assert_eq!(
        w.engine.can_view(UserId(99), p),
        Err(CoreError::UnknownUser(UserId(99)))
    );
    assert_eq!(
        w.engine.can_view(a, PostId(99)),
        Err(CoreError::UnknownPost(PostId(99)))
    );

    w.exec(Command::DeletePost { author: a, post: p }).unwrap();
    assert!(w.engine.can_view(a, p).unwrap());
    assert!(!w.engine.can_view(t, p).unwrap());
    assert!(!w.engine.can_view(v, p).unwrap());
}

#[test]
fn burst_options_order_and_filters() {
    let mut w = World::new();
    let a = w.user("a");
    let v = w.user("v");
    let lol = w.channel("#lol", None);
    let burst = w.channel("#burst", None);
    let aaa = w.channel("#aaa", None);
    for c in [lol, burst, aaa] {
        w.join(a, c);
        w.join(v, c);
    }
    w.team(a, &[v]);
    let everyone = w.engine.state().everyone().unwrap();

    let mut new = NewPost::original(a, "hi");
    new.suggested = vec![burst];
    let p = w.post(new).unwrap();
    let opts = w.engine.burst_options(v, p).unwrap();
    let names: Vec<(&str, bool)> = opts
        .iter()
        .map(|o| (o.name.as_str(), o.suggested))
        .collect();
    assert_eq!(
        names,
        vec![
            ("#burst", true),
            ("#aaa", false),
            ("#everyone", false),
            ("#lol", false)
        ]
    );
    assert!(opts.iter().all(|o| o.votes == 0));
    assert_eq!(
        opts.iter()
            .find(|o| o.channel == everyone)
            .unwrap()
            .threshold,
        w.engine.compute_threshold(everyone).unwrap()
    );

    // Blocked channels never appear.
    let mut blocked = NewPost::original(a, "not for lol");
    blocked.blocked = [lol, aaa, everyone].into();
    let q = w.post(blocked).unwrap();
    let opts = w.engine.burst_options(v, q).unwrap();
    assert_eq!(
        opts.iter().map(|o| o.channel).collect::<Vec<_>>(),
        vec![burst]
    );

    // Nothing left once every joined channel has burst.
    let r = w.post(NewPost::original(a, "everywhere")).unwrap();
    let all: Vec<ChannelId> = w
        .engine
        .state()
        .user(v)
        .unwrap()
        .joined_channels
        .iter()
        .copied()
        .collect();
    let c = w.user("c");
    w.team(a, &[c]);
    for ch in &all {
        w.join(c, *ch);
    }
    w.burst(v, r, &all).unwrap();
    w.burst(c, r, &all).unwrap();
    let thresholds: Vec<u32> = all
        .iter()
        .map(|c| w.engine.compute_threshold(*c).unwrap())
        .collect();
    assert!(thresholds.iter().all(|&t| t <= 2), "{thresholds:?}");
    assert!(w.engine.burst_options(v, r).unwrap().is_empty());

    let o = w.user("outsider");
    assert_eq!(w.engine.burst_options(o, p), Err(CoreError::NotVisible(p)));
}

#[test]
fn only_blocked_channel_joined_gives_empty_options() {
    let mut w = World::new();
    let a = w.user("a");
    let v = w.user("v");
    let lol = w.channel("#lol", None);
    w.join(v, lol);
    w.team(a, &[v]);
    let everyone = w.engine.state().everyone().unwrap();
    let mut new = NewPost::original(a, "hi");
    new.blocked = [lol, everyone].into();
    let p = w.post(new).unwrap();
    assert!(w.engine.burst_options(v, p).unwrap().is_empty());
}

#[test]
fn cast_burst_outcomes() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let c = w.user("c");
    let burst = w.channel("#burst", Some(2));
    let other = w.channel("#other", None);
    let blocked = w.channel("#blocked", None);
    for u in [b, c] {
        w.join(u, burst);
        w.join(u, blocked);
    }
    w.team(a, &[b, c]);
    let mut new = NewPost::original(a, "hi");
    new.blocked = [blocked].into();
    let p = w.post(new).unwrap();

    assert_eq!(w.burst(b, p, &[burst]).unwrap(), vec![progress(1, 2)]);
    let before = w.engine.state().clone();
    assert_eq!(
        w.burst(b, p, &[burst]).unwrap(),
        vec![BurstOutcome::AlreadyVoted]
    );
    assert_eq!(
        w.engine.state().post(p),
        before.post(p),
        "idempotent repeat vote"
    );
    assert_eq!(w.engine.state().post(p).unwrap().burst.vote_count(burst), 1);

    assert_eq!(
        w.burst(c, p, &[burst, other, blocked, burst]).unwrap(),
        vec![
            BurstOutcome::Burst,
            rejected(RejectReason::NotMember),
            rejected(RejectReason::Blocked)
        ]
    );
    assert_eq!(
        w.burst(b, p, &[burst]).unwrap(),
        vec![rejected(RejectReason::AlreadyBurst)]
    );

    assert_eq!(w.burst(a, p, &[burst]), Err(CoreError::SelfBurst));
    let outsider = w.user("outsider");
    let hidden = w.post(NewPost::original(a, "team only")).unwrap();
    assert_eq!(
        w.burst(outsider, hidden, &[burst]),
        Err(CoreError::NotVisible(hidden))
    );
    assert_eq!(
        w.burst(b, p, &[ChannelId(99)]),
        Err(CoreError::UnknownChannel(ChannelId(99)))
    );

    let author_notes = w
        .engine
        .state()
        .notifications()
        .filter(|n| n.recipient == a && n.kind == NotificationKind::PostBurst)
        .count();
    assert_eq!(author_notes, 1);
}

#[test]
fn unknown_channel_rejects_whole_request() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let ch = w.channel("#ch", Some(5));
    w.join(b, ch);
    w.team(a, &[b]);
    let p = w.post(NewPost::original(a, "hi")).unwrap();
    let before = w.engine.state().clone();
    assert!(w.burst(b, p, &[ch, ChannelId(77)]).is_err());
    assert_eq!(w.engine.state(), &before);
}

#[test]
fn membership_growth_never_unbursts() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let ch = w.channel_by(b, "#small", None).unwrap();
    w.team(a, &[b]);
    let p = w.post(NewPost::original(a, "hi")).unwrap();
    assert_eq!(w.engine.compute_threshold(ch).unwrap(), 1);
    assert_eq!(w.burst(b, p, &[ch]).unwrap(), vec![BurstOutcome::Burst]);
    for i in 0..60 {
        let u = w.user(&format!("late{i}"));
        w.join(u, ch);
    }
    assert!(w.engine.compute_threshold(ch).unwrap() > 1);
    assert!(w
        .engine
        .state()
        .post(p)
        .unwrap()
        .burst
        .burst_into
        .contains_key(&ch));
}

#[test]
fn retraction_is_absorbing() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let c = w.user("c");
    let v = w.user("v");
    let ch = w.channel("#ch", Some(1));
    for u in [b, c, v] {
        w.join(u, ch);
    }
    w.team(a, &[b, c]);
    let p = w.post(NewPost::original(a, "hi")).unwrap();
    w.burst(b, p, &[ch]).unwrap();
    assert!(w.engine.can_view(v, p).unwrap());

    assert_eq!(
        w.exec(Command::RetractFromChannel {
            author: b,
            post: p,
            channel: ch
        }),
        Err(CoreError::NotAuthor)
    );
    w.exec(Command::RetractFromChannel {
        author: a,
        post: p,
        channel: ch,
    })
    .unwrap();
    assert!(!w.engine.can_view(v, p).unwrap(), "back to team only");
    assert_eq!(w.viewers(p), [a, b, c].into());
    assert_eq!(w.engine.state().post(p).unwrap().burst.vote_count(ch), 0);
    assert_eq!(
        w.exec(Command::RetractFromChannel {
            author: a,
            post: p,
            channel: ch
        }),
        Err(CoreError::NotBurstThere(ch))
    );
    assert_eq!(
        w.burst(c, p, &[ch]).unwrap(),
        vec![rejected(RejectReason::Retracted)]
    );
    assert!(w
        .engine
        .burst_options(c, p)
        .unwrap()
        .iter()
        .all(|o| o.channel != ch));
    assert_eq!(
        w.exec(Command::BlockChannel {
            author: a,
            post: p,
            channel: ch
        }),
        Err(CoreError::AlreadyRetracted(ch))
    );
}

#[test]
fn retroactive_block() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let c = w.user("c");
    let ch = w.channel("#ch", Some(2));
    let fast = w.channel("#fast", Some(1));
    for u in [a, b, c] {
        w.join(u, ch);
        w.join(u, fast);
    }
    w.team(a, &[b, c]);
    let mut new = NewPost::original(a, "hi");
    new.suggested = vec![ch, fast];
    let p = w.post(new).unwrap();
    w.burst(b, p, &[ch, fast]).unwrap();

    assert_eq!(
        w.exec(Command::BlockChannel {
            author: b,
            post: p,
            channel: ch
        }),
        Err(CoreError::NotAuthor)
    );
    assert_eq!(
        w.exec(Command::BlockChannel {
            author: a,
            post: p,
            channel: fast
        }),
        Err(CoreError::AlreadyBurstUseRetract(fast))
    );
    w.exec(Command::BlockChannel {
        author: a,
        post: p,
        channel: ch,
    })
    .unwrap();
    let post = w.engine.state().post(p).unwrap();
    assert!(post.blocked_channels.contains(&ch));
    assert_eq!(post.burst.vote_count(ch), 0, "pending votes discarded");
    assert_eq!(post.suggested_channels, vec![fast]);
    assert_eq!(
        w.burst(c, p, &[ch]).unwrap(),
        vec![rejected(RejectReason::Blocked)]
    );
    // Repeat block is a no-op.
    let (_, events) = w
        .engine
        .execute(&Command::BlockChannel {
            author: a,
            post: p,
            channel: ch,
        })
        .unwrap();
    assert!(events.is_empty());
}

#[test]
fn team_mechanics() {
    let mut w = World::with(Settings {
        max_team_size: 3,
        ..Settings::default()
    });
    let owner = w.user("owner");
    let others: Vec<UserId> = (0..4).map(|i| w.user(&format!("m{i}"))).collect();

    assert_eq!(
        w.exec(Command::AcceptTeamInvite {
            invitee: others[0],
            owner
        }),
        Err(CoreError::NotInvited {
            owner,
            invitee: others[0]
        })
    );
    assert_eq!(
        w.exec(Command::InviteToTeam {
            owner,
            invitee: owner
        }),
        Err(CoreError::SelfInvite)
    );

    w.exec(Command::InviteToTeam {
        owner,
        invitee: others[0],
    })
    .unwrap();
    assert_eq!(
        w.exec(Command::InviteToTeam {
            owner,
            invitee: others[0]
        }),
        Err(CoreError::AlreadyInvited {
            owner,
            invitee: others[0]
        })
    );
    let p_before = w.post(NewPost::original(owner, "before")).unwrap();
    w.exec(Command::AcceptTeamInvite {
        invitee: others[0],
        owner,
    })
    .unwrap();
    let p_after = w.post(NewPost::original(owner, "after")).unwrap();
    assert!(w.engine.can_view(others[0], p_after).unwrap());
    // Team membership is current, not historical.
    assert!(w.engine.can_view(others[0], p_before).unwrap());
    assert!(w
        .engine
        .state()
        .notifications()
        .any(|n| n.recipient == others[0] && n.kind == NotificationKind::TeamInvite));

    w.exec(Command::InviteToTeam {
        owner,
        invitee: others[1],
    })
    .unwrap();
    w.exec(Command::DeclineTeamInvite {
        invitee: others[1],
        owner,
    })
    .unwrap();
    assert_eq!(
        w.exec(Command::DeclineTeamInvite {
            invitee: others[1],
            owner
        }),
        Err(CoreError::NotInvited {
            owner,
            invitee: others[1]
        })
    );

    // Cap counts accepted and pending members.
    w.exec(Command::InviteToTeam {
        owner,
        invitee: others[1],
    })
    .unwrap();
    w.exec(Command::InviteToTeam {
        owner,
        invitee: others[2],
    })
    .unwrap();
    assert_eq!(
        w.exec(Command::InviteToTeam {
            owner,
            invitee: others[3]
        }),
        Err(CoreError::TeamFull { cap: 3 })
    );

    w.exec(Command::LeaveTeam {
        member: others[0],
        owner,
    })
    .unwrap();
    assert!(!w.engine.can_view(others[0], p_after).unwrap());
    assert_eq!(
        w.exec(Command::RemoveTeamMember {
            owner,
            member: others[0]
        }),
        Err(CoreError::NotTeamMember {
            owner,
            member: others[0]
        })
    );
    let u = w.engine.state().user(owner).unwrap();
    assert!(u.team_member_ids.is_disjoint(&u.pending_team_invites));
    assert!(!u.team_member_ids.contains(&owner));
}

#[test]
fn fifty_first_invite_hits_default_cap() {
    let mut w = World::new();
    let owner = w.user("owner");
    for i in 0..DEFAULT_MAX_TEAM_SIZE {
        let m = w.user(&format!("m{i}"));
        w.exec(Command::InviteToTeam { owner, invitee: m }).unwrap();
    }
    let extra = w.user("extra");
    assert_eq!(
        w.exec(Command::InviteToTeam {
            owner,
            invitee: extra
        }),
        Err(CoreError::TeamFull { cap: 50 })
    );
}

#[test]
fn channel_mechanics() {
    let mut w = World::new();
    let u = w.user("u");
    let gto = w.channel_by(u, "#gto", None).unwrap();
    let c = w.engine.state().channel(gto).unwrap();
    assert_eq!(c.member_ids, [u].into());
    assert_eq!(
        w.engine.compute_threshold(gto).unwrap(),
        w.engine.settings().threshold.min_threshold()
    );

    assert_eq!(
        w.channel_by(u, "#everyone", None),
        Err(CoreError::DuplicateName("#everyone".into()))
    );
    assert_eq!(
        w.channel_by(u, "#gto", None),
        Err(CoreError::DuplicateName("#gto".into()))
    );
    assert_eq!(
        w.channel_by(u, "gto", None),
        Err(CoreError::BadName("gto".into()))
    );
    assert_eq!(w.channel_by(u, "#big", Some(9)), Err(CoreError::NotAdmin));
    assert_eq!(
        w.channel_by(w.admin, "#zero", Some(0)),
        Err(CoreError::BadThresholdOverride)
    );

    let everyone = w.engine.state().everyone().unwrap();
    assert_eq!(
        w.exec(Command::LeaveChannel {
            user: u,
            channel: everyone
        }),
        Err(CoreError::CannotLeaveEveryone)
    );

    let v = w.user("v");
    let before = w.engine.compute_threshold(gto).unwrap();
    w.join(v, gto);
    w.join(v, gto);
    assert!(w.engine.compute_threshold(gto).unwrap() >= before);
    assert_eq!(w.engine.state().channel(gto).unwrap().member_ids.len(), 2);
    w.exec(Command::LeaveChannel {
        user: v,
        channel: gto,
    })
    .unwrap();
    assert_eq!(
        w.exec(Command::LeaveChannel {
            user: v,
            channel: gto
        }),
        Err(CoreError::NotAMember {
            user: v,
            channel: gto
        })
    );
    assert!(w
        .engine
        .state()
        .channel(everyone)
        .unwrap()
        .member_ids
        .contains(&v));
}

#[test]
fn everyone_strictly_hardest_on_fresh_install() {
    let mut w = World::new();
    let everyone = w.engine.state().everyone().unwrap();
    let small = w.channel("#small", None);
    let t_all = w.engine.compute_threshold(everyone).unwrap();
    assert!(t_all > w.engine.compute_threshold(small).unwrap());
    let big = w.channel("#big", Some(50));
    assert_eq!(w.engine.compute_threshold(everyone).unwrap(), 51);
    assert_eq!(w.engine.compute_threshold(big).unwrap(), 50);
}

#[test]
fn handles_and_bootstrap() {
    let mut w = World::new();
    assert_eq!(
        w.exec(Command::CreateUser {
            handle: "admin".into(),
            display_name: String::new(),
            credential: String::new()
        }),
        Err(CoreError::DuplicateHandle("admin".into()))
    );
    assert_eq!(
        w.exec(Command::CreateUser {
            handle: "Bad Handle".into(),
            display_name: String::new(),
            credential: String::new()
        }),
        Err(CoreError::BadHandle("Bad Handle".into()))
    );
    assert_eq!(
        w.exec(Command::Bootstrap {
            admin_handle: "root".into(),
            display_name: String::new(),
            credential: String::new()
        }),
        Err(CoreError::AlreadyBootstrapped)
    );
    let mut fresh = Engine::new(Settings::default(), Clock::logical());
    assert_eq!(
        fresh
            .execute(&Command::CreateUser {
                handle: "early".into(),
                display_name: String::new(),
                credential: String::new()
            })
            .unwrap_err(),
        CoreError::NotBootstrapped
    );
    // Every user lands in #everyone.
    let u = w.user("someone");
    let everyone = w.engine.state().everyone().unwrap();
    assert!(w
        .engine
        .state()
        .user(u)
        .unwrap()
        .joined_channels
        .contains(&everyone));
}

#[test]
fn reactions_are_attributed_and_gated() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let o = w.user("o");
    w.team(a, &[b]);
    let p = w.post(NewPost::original(a, "hi")).unwrap();

    w.exec(Command::AddReaction {
        user: b,
        post: p,
        emoji: "👍".into(),
    })
    .unwrap();
    w.exec(Command::AddReaction {
        user: a,
        post: p,
        emoji: "👍".into(),
    })
    .unwrap();
    let (_, evs) = w
        .engine
        .execute(&Command::AddReaction {
            user: b,
            post: p,
            emoji: "👍".into(),
        })
        .unwrap();
    assert!(evs.is_empty(), "one reaction per (post, user, emoji)");
    let view = w.engine.post_view(a, p).unwrap();
    assert_eq!(view.reactions.len(), 1);
    assert_eq!(view.reactions[0].count, 2);
    assert_eq!(view.reactions[0].users, vec![a, b]);

    assert_eq!(
        w.exec(Command::AddReaction {
            user: b,
            post: p,
            emoji: "🦀".into()
        }),
        Err(CoreError::EmojiNotAllowed("🦀".into()))
    );
    assert_eq!(
        w.exec(Command::AddReaction {
            user: o,
            post: p,
            emoji: "👍".into()
        }),
        Err(CoreError::NotVisible(p))
    );
    w.exec(Command::RemoveReaction {
        user: b,
        post: p,
        emoji: "👍".into(),
    })
    .unwrap();
    assert_eq!(w.engine.post_view(a, p).unwrap().reactions[0].count, 1);
}

#[test]
fn feed_merges_tags_and_banners() {
    let mut w = World::new();
    let sanjay = w.user("sanjay");
    let viewer = w.user("viewer");
    let other = w.user("other");
    let ca = w.channel("#a", Some(1));
    let cb = w.channel("#b", Some(1));
    for u in [viewer, other] {
        w.join(u, ca);
        w.join(u, cb);
    }
    w.team(sanjay, &[viewer]);
    w.team(other, &[viewer]);

    // Empty state, empty feed.
    let empty = w.engine.assemble_feed(&FeedQuery::new(other)).unwrap();
    assert!(empty.entries.is_empty());
    assert_eq!(empty.next_cursor, None);

    let sanjay_post = w
        .post(NewPost::original(sanjay, "unburst team post"))
        .unwrap();
    let third = w.user("third");
    w.team(other, &[third]);
    w.join(third, ca);
    w.join(third, cb);
    let both = w.post(NewPost::original(other, "goes to a and b")).unwrap();
    w.burst(third, both, &[ca, cb]).unwrap();

    let feed = w.engine.assemble_feed(&FeedQuery::new(viewer)).unwrap();
    assert_eq!(feed.post_ids(), vec![both, sanjay_post], "newest first");
    let e_both = &feed.entries[0];
    assert_eq!(e_both.channel_tags, [ca, cb].into());
    assert_eq!(e_both.team_banner, Some(other));
    let e_sanjay = &feed.entries[1];
    assert_eq!(e_sanjay.team_banner, Some(sanjay));
    assert!(e_sanjay.channel_tags.is_empty());

    // A viewer outside the team still gets one card with both tags, no banner.
    let outsider = w.user("outsider");
    w.join(outsider, ca);
    w.join(outsider, cb);
    let feed = w.engine.assemble_feed(&FeedQuery::new(outsider)).unwrap();
    assert_eq!(feed.post_ids(), vec![both]);
    assert_eq!(feed.entries[0].team_banner, None);
    assert_eq!(feed.entries[0].channel_tags, [ca, cb].into());

    let filtered = w
        .engine
        .assemble_feed(&FeedQuery::new(viewer).channel(ca))
        .unwrap();
    assert_eq!(filtered.post_ids(), vec![both]);
    let loner = w.user("loner");
    assert_eq!(
        w.engine.assemble_feed(&FeedQuery::new(loner).channel(ca)),
        Err(CoreError::NotAMember {
            user: loner,
            channel: ca
        })
    );
}

#[test]
fn feed_nests_replies_and_hides_deleted() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    w.team(a, &[b]);
    w.team(b, &[a]);
    let root = w.post(NewPost::original(a, "root")).unwrap();
    let mut r1 = NewPost::original(b, "first reply");
    r1.kind = PostKind::Reply;
    r1.parent = Some(root);
    let r1 = w.post(r1).unwrap();
    let mut r2 = NewPost::original(a, "reply to reply");
    r2.kind = PostKind::Reply;
    r2.parent = Some(r1);
    let r2 = w.post(r2).unwrap();
    let mut q = NewPost::original(b, "quote");
    q.kind = PostKind::Quote;
    q.quoted = Some(root);
    let q = w.post(q).unwrap();

    let feed = w.engine.assemble_feed(&FeedQuery::new(a)).unwrap();
    assert_eq!(feed.entries.len(), 2);
    assert_eq!(feed.entries[0].post, q);
    assert_eq!(feed.entries[1].post, root);
    assert_eq!(feed.entries[1].replies[0].post, r1);
    assert_eq!(feed.entries[1].replies[0].replies[0].post, r2);

    w.exec(Command::DeletePost {
        author: a,
        post: root,
    })
    .unwrap();
    let feed = w.engine.assemble_feed(&FeedQuery::new(a)).unwrap();
    let ids = feed.post_ids();
    assert!(!ids.contains(&root));
    // The orphaned reply surfaces on its own.
    assert!(ids.contains(&r1) && ids.contains(&r2));
    assert_eq!(ids.len(), 3);
}

#[test]
fn feed_pagination_is_stable() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    w.team(a, &[b]);
    let posts: Vec<PostId> = (0..7)
        .map(|i| w.post(NewPost::original(a, format!("p{i}"))).unwrap())
        .collect();
    let mut seen = Vec::new();
    let mut cursor = None;
    loop {
        let mut q = FeedQuery::new(b).limit(3);
        q.cursor = cursor;
        let page = w.engine.assemble_feed(&q).unwrap();
        seen.extend(page.post_ids());
        match page.next_cursor {
            Some(c) => cursor = Some(c),
            None => break,
        }
    }
    let mut expected = posts.clone();
    expected.reverse();
    assert_eq!(seen, expected);
}

#[test]
fn notifications_ack() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    w.team(a, &[b]);
    w.post(NewPost::original(a, "hi")).unwrap();
    let n = w
        .engine
        .state()
        .notifications()
        .find(|n| n.recipient == b && n.kind == NotificationKind::TeamReview)
        .unwrap()
        .id;
    assert_eq!(
        w.exec(Command::AckNotification {
            user: a,
            notification: n
        }),
        Err(CoreError::UnknownNotification(n))
    );
    w.exec(Command::AckNotification {
        user: b,
        notification: n,
    })
    .unwrap();
    assert!(w.engine.state().notification(n).unwrap().acked);
}

#[test]
fn error_codes_are_variant_names() {
    assert_eq!(
        CoreError::SuggestBlockOverlap(ChannelId(1)).code(),
        "SuggestBlockOverlap"
    );
    assert_eq!(CoreError::TeamFull { cap: 1 }.code(), "TeamFull");
    assert_eq!(CoreError::NotVisible(PostId(1)).code(), "NotVisible");
}

#[test]
fn live_state_equals_replayed_log() {
    let mut w = World::new();
    let a = w.user("a");
    let b = w.user("b");
    let ch = w.channel("#ch", Some(1));
    w.join(b, ch);
    w.team(a, &[b]);
    let p = w.post(NewPost::original(a, "hi")).unwrap();
    w.burst(b, p, &[ch]).unwrap();

    w.exec(Command::AddReaction {
        user: b,
        post: p,
        emoji: "🎉".into(),
    })
    .unwrap();
    w.exec(Command::RetractFromChannel {
        author: a,
        post: p,
        channel: ch,
    })
    .unwrap();

    let folded = State::replay(&w.log).unwrap();
    assert_eq!(folded, *w.engine.state());
    assert_eq!(folded.canonical_bytes(), w.engine.state().canonical_bytes());
    let log = &w.log;

    // Out-of-order events are refused.
    let mut state = State::new();
    let mut bad = log[1].clone();
    bad.seq = EventSeq(5);
    assert!(matches!(
        state.apply(&bad),
        Err(ReplayError::OutOfOrder { .. })
    ));
}
