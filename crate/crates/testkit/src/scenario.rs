//! The idea-sharing story, driven directly against the engine.
//!
//! Xiaoling posts to her team suggesting `#burst` and `#stanford-hci`.
//! Five teammates vote for both: `#burst` (threshold 2) fires on the second
//! vote, `#stanford-hci` (threshold 10) reaches 5/10. Five `#burst` members
//! who are also in `#stanford-hci` push it over. Fifty `#stanford-hci`
//! readers who are in `#cscw` (threshold 50) then carry it there, and
//! Xiaoling joins `#cscw` afterwards.

use burst_core::{
    BurstOutcome, ChannelId, Clock, Command, Engine, Event, NewPost, Outcome, PostId, RejectReason,
    Settings, UserId,
};

pub const TEAM: usize = 5;
pub const BURST_MEMBERS: usize = 5;
pub const CSCW_VOTERS: usize = 50;

pub struct Story {
    pub engine: Engine,
    /// Every event appended while playing the story.
    pub events: Vec<Event>,
    pub xiaoling: UserId,
    pub post: PostId,
    pub burst: ChannelId,
    pub stanford_hci: ChannelId,
    pub cscw: ChannelId,
    pub hci: ChannelId,
    pub team: Vec<UserId>,
    pub burst_members: Vec<UserId>,
    pub cscw_voters: Vec<UserId>,
    /// Per-vote outcomes in order, as `(voter, channel, outcome)`.
    pub votes: Vec<(UserId, ChannelId, BurstOutcome)>,
}

struct Recorder {
    engine: Engine,
    events: Vec<Event>,
}

fn run(rec: &mut Recorder, cmd: Command) -> Outcome {
    match rec.engine.execute(&cmd) {
        Ok((outcome, events)) => {
            rec.events.extend(events);
            outcome
        }
        Err(e) => panic!("story command {cmd:?} failed: {e}"),
    }
}

fn user(engine: &mut Recorder, handle: &str) -> UserId {
    match run(
        engine,
        Command::CreateUser {
            handle: handle.into(),
            display_name: handle.into(),
            credential: String::new(),
        },
    ) {
        Outcome::User(u) => u,
        o => panic!("unexpected {o:?}"),
    }
}

fn channel(engine: &mut Recorder, admin: UserId, name: &str, threshold: Option<u32>) -> ChannelId {
    match run(
        engine,
        Command::CreateChannel {
            creator: admin,
            name: name.into(),
            description: String::new(),
            threshold_override: threshold,
        },
    ) {
        Outcome::Channel(c) => c,
        o => panic!("unexpected {o:?}"),
    }
}

/// Builds the world and plays the story up to (not including) Xiaoling
/// joining `#cscw`.
pub fn play(settings: Settings) -> Story {
    let mut engine = Recorder {
        engine: Engine::new(settings, Clock::logical()),
        events: Vec::new(),
    };
    let admin = match run(
        &mut engine,
        Command::Bootstrap {
            admin_handle: "admin".into(),
            display_name: "Admin".into(),
            credential: String::new(),
        },
    ) {
        Outcome::User(u) => u,
        o => panic!("unexpected {o:?}"),
    };
    let burst = channel(&mut engine, admin, "#burst", Some(2));
    let stanford_hci = channel(&mut engine, admin, "#stanford-hci", Some(10));
    let cscw = channel(&mut engine, admin, "#cscw", Some(50));
    let hci = channel(&mut engine, admin, "#hci", None);

    let join = |engine: &mut Recorder, user: UserId, channel: ChannelId| {
        run(engine, Command::JoinChannel { user, channel });
    };

    let xiaoling = user(&mut engine, "xiaoling");
    for c in [burst, stanford_hci, hci] {
        join(&mut engine, xiaoling, c);
    }
    let team: Vec<UserId> = (1..=TEAM)
        .map(|i| user(&mut engine, &format!("teammate-{i}")))
        .collect();
    let burst_members: Vec<UserId> = (1..=BURST_MEMBERS)
        .map(|i| user(&mut engine, &format!("burst-member-{i}")))
        .collect();
    let cscw_voters: Vec<UserId> = (1..=CSCW_VOTERS)
        .map(|i| user(&mut engine, &format!("cscw-reader-{i}")))
        .collect();
    for &u in team.iter().chain(&burst_members) {
        join(&mut engine, u, burst);
        join(&mut engine, u, stanford_hci);
    }
    for &u in &cscw_voters {
        join(&mut engine, u, stanford_hci);
        join(&mut engine, u, cscw);
    }
    for &member in &team {
        run(
            &mut engine,
            Command::InviteToTeam {
                owner: xiaoling,
                invitee: member,
            },
        );
        run(
            &mut engine,
            Command::AcceptTeamInvite {
                invitee: member,
                owner: xiaoling,
            },
        );
    }

    let mut new = NewPost::original(
        xiaoling,
        "Burst could fill the gap between private group chats and public social media.",
    );
    new.suggested = vec![burst, stanford_hci];
    let post = match run(&mut engine, Command::CreatePost(new)) {
        Outcome::Post(p) => p,
        o => panic!("unexpected {o:?}"),
    };

    let mut votes = Vec::new();
    let mut cast = |engine: &mut Recorder, voter: UserId, channels: Vec<ChannelId>| {
        let outcome = run(
            engine,
            Command::CastBurst {
                voter,
                post,
                channels,
            },
        );
        let Outcome::Bursts(list) = outcome else {
            panic!("unexpected {outcome:?}");
        };
        for o in list {
            votes.push((voter, o.channel, o.result));
        }
    };
    for &member in &team {
        cast(&mut engine, member, vec![burst, stanford_hci]);
    }
    for &member in &burst_members {
        cast(&mut engine, member, vec![stanford_hci]);
    }
    for &reader in &cscw_voters {
        cast(&mut engine, reader, vec![cscw]);
    }

    Story {
        engine: engine.engine,
        events: engine.events,
        xiaoling,
        post,
        burst,
        stanford_hci,
        cscw,
        hci,
        team,
        burst_members,
        cscw_voters,
        votes,
    }
}

/// The per-vote outcomes the story must produce, in order.
pub fn expected_outcomes(story: &Story) -> Vec<(UserId, ChannelId, BurstOutcome)> {
    let mut out = Vec::new();
    for (i, &member) in story.team.iter().enumerate() {
        let n = i as u32 + 1;
        let into_burst = match n {
            1 => BurstOutcome::Progress {
                votes: 1,
                threshold: 2,
            },
            2 => BurstOutcome::Burst,
            _ => BurstOutcome::Rejected {
                reason: RejectReason::AlreadyBurst,
            },
        };
        out.push((member, story.burst, into_burst));
        out.push((
            member,
            story.stanford_hci,
            BurstOutcome::Progress {
                votes: n,
                threshold: 10,
            },
        ));
    }
    for (i, &member) in story.burst_members.iter().enumerate() {
        let n = TEAM as u32 + i as u32 + 1;
        let o = if n == 10 {
            BurstOutcome::Burst
        } else {
            BurstOutcome::Progress {
                votes: n,
                threshold: 10,
            }
        };
        out.push((member, story.stanford_hci, o));
    }
    for (i, &reader) in story.cscw_voters.iter().enumerate() {
        let n = i as u32 + 1;
        let o = if n == 50 {
            BurstOutcome::Burst
        } else {
            BurstOutcome::Progress {
                votes: n,
                threshold: 50,
            }
        };
        out.push((reader, story.cscw, o));
    }
    out
}
