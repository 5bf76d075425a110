use std::collections::HashSet;

use burst_core::{
    Command, Engine, EventKind, FeedQuery, NewPost, Outcome, PostId, Settings, State, UserId,
};
use burst_testkit::{checks, Generator, LogOracle, WorldConfig};
use proptest::prelude::*;

#[test]
fn visibility_agrees_with_oracle_in_every_state() {
    for seed in 0..150 {
        let mut oracle = LogOracle::new();
        let policy = Settings::default().threshold;
        let mut failure = None;
        Generator::new(seed, WorldConfig::small()).run(|step| {
            if failure.is_some() {
                return;
            }
            if let Ok((_, events)) = step.result {
                for ev in events {
                    if let Err(e) = oracle.observe(ev, &policy) {
                        failure = Some(e);
                        return;
                    }
                }
            }
            if let Err(e) = checks::visibility(step.engine, &oracle) {
                failure = Some(format!("after {:?}: {e}", step.command));
            }
        });
        assert!(failure.is_none(), "seed {seed}: {}", failure.unwrap());
    }
}

#[test]
fn feeds_page_through_every_visible_post_once() {
    for seed in 0..60 {
        let run = Generator::new(seed, WorldConfig::small()).run(|_| {});
        for u in run.engine.state().users() {
            for page in [1, 3, 50] {
                if let Err(e) = checks::feed(&run.engine, u.id, page) {
                    panic!("seed {seed}, page {page}: {e}");
                }
            }
        }
    }
}

#[test]
fn routing_invariants_hold_under_random_traffic() {
    let mut bursts = 0;
    for seed in 1000..1030 {
        let mut oracle = LogOracle::new();
        let policy = Settings::default().threshold;
        let mut failure: Option<String> = None;
        Generator::new(seed, WorldConfig::medium()).run(|step| {
            if failure.is_some() {
                return;
            }
            let before = oracle.burst_sets();
            let Ok((_, events)) = step.result else {
                return;
            };
            let mut retracted = HashSet::new();
            for ev in events {
                if let EventKind::PostRetracted { post, channel } = &ev.kind {
                    retracted.insert((post.0, channel.0));
                }
                if let Err(e) = oracle.observe(ev, &policy) {
                    failure = Some(e);
                    return;
                }
            }
            // Burst sets only shrink through explicit retraction.
            for (post, set) in before {
                let now = &oracle.burst_sets()[&post];
                for c in set.difference(now) {
                    if !retracted.contains(&(post, *c)) {
                        failure = Some(format!("p{post} left c{c} without retraction"));
                    }
                }
            }
            if let Err(e) = checks::everyone_is_hardest(step.engine) {
                failure = Some(e);
            }
        });
        assert!(failure.is_none(), "seed {seed}: {}", failure.unwrap());
        bursts += oracle.bursts_seen();
    }
    assert!(
        bursts > 50,
        "generator produced too few bursts ({bursts}) to be meaningful"
    );
}

#[test]
fn replay_is_deterministic_and_matches_live_state() {
    for seed in 0..40 {
        let a = Generator::new(seed, WorldConfig::medium()).run(|_| {});
        let b = Generator::new(seed, WorldConfig::medium()).run(|_| {});
        assert_eq!(a.events, b.events, "seed {seed}: logs diverge");
        let folded = State::replay(&a.events).unwrap();
        let live = a.engine.state().canonical_bytes();
        assert_eq!(folded.canonical_bytes(), live, "seed {seed}");
        let round = State::from_canonical_bytes(&live).unwrap();
        assert_eq!(round.canonical_bytes(), live, "seed {seed}");
    }
}

#[test]
fn repeated_commands_append_nothing() {
    for seed in 0..40 {
        Generator::new(seed, WorldConfig::small()).run(|step| {
            let repeatable = matches!(
                step.command,
                Command::JoinChannel { .. }
                    | Command::AddReaction { .. }
                    | Command::RemoveReaction { .. }
                    | Command::BlockChannel { .. }
                    | Command::DeletePost { .. }
                    | Command::AckNotification { .. }
                    | Command::CastBurst { .. }
            );
            if !repeatable || step.result.is_err() {
                return;
            }
            let again = step.engine.prepare(step.command);
            match again {
                Ok(p) => assert!(
                    p.events.is_empty(),
                    "seed {seed}: repeating {:?} appended {:?}",
                    step.command,
                    p.events
                ),
                Err(e) => panic!("seed {seed}: repeating {:?} failed: {e}", step.command),
            }
        });
    }
}

/// Two worlds identical except for which user cast a vote. Everything any
/// third party or the author reads must match byte for byte.
#[test]
fn reads_do_not_reveal_who_voted() {
    fn world(voter: usize) -> (Engine, UserId, UserId, PostId) {
        let mut e = Engine::new(Settings::default(), burst_core::Clock::logical());
        let user = |e: &mut Engine, h: &str| match e
            .execute(&Command::CreateUser {
                handle: h.into(),
                display_name: h.into(),
                credential: String::new(),
            })
            .unwrap()
            .0
        {
            Outcome::User(u) => u,
            o => panic!("{o:?}"),
        };
        let Outcome::User(admin) = e
            .execute(&Command::Bootstrap {
                admin_handle: "admin".into(),
                display_name: "Admin".into(),
                credential: String::new(),
            })
            .unwrap()
            .0
        else {
            unreachable!()
        };
        let Outcome::Channel(ch) = e
            .execute(&Command::CreateChannel {
                creator: admin,
                name: "#ideas".into(),
                description: String::new(),
                threshold_override: Some(3),
            })
            .unwrap()
            .0
        else {
            unreachable!()
        };
        let author = user(&mut e, "author");
        let bystander = user(&mut e, "bystander");
        let voters = [user(&mut e, "v1"), user(&mut e, "v2")];
        for u in [author, bystander, voters[0], voters[1]] {
            e.execute(&Command::JoinChannel {
                user: u,
                channel: ch,
            })
            .unwrap();
        }
        for v in voters.iter().chain([&bystander]) {
            e.execute(&Command::InviteToTeam {
                owner: author,
                invitee: *v,
            })
            .unwrap();
            e.execute(&Command::AcceptTeamInvite {
                invitee: *v,
                owner: author,
            })
            .unwrap();
        }
        let mut new = NewPost::original(author, "hello");
        new.suggested = vec![ch];
        let Outcome::Post(post) = e.execute(&Command::CreatePost(new)).unwrap().0 else {
            unreachable!()
        };
        e.execute(&Command::CastBurst {
            voter: voters[voter],
            post,
            channels: vec![ch],
        })
        .unwrap();
        (e, author, bystander, post)
    }
    let reads = |(e, author, bystander, post): &(Engine, UserId, UserId, PostId)| {
        let mut out = Vec::new();
        for viewer in [*author, *bystander] {
            out.push(serde_json::to_vec(&e.post_view(viewer, *post).unwrap()).unwrap());
            out.push(serde_json::to_vec(&e.burst_options(viewer, *post).unwrap()).unwrap());
            out.push(
                serde_json::to_vec(&e.assemble_feed(&FeedQuery::new(viewer)).unwrap()).unwrap(),
            );
            out.push(serde_json::to_vec(&e.channel_directory(Some(viewer))).unwrap());
        }
        out
    };
    let a = world(0);
    let b = world(1);
    assert_eq!(reads(&a), reads(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prepare_is_pure(seed in any::<u64>()) {
        let mut cfg = WorldConfig::small();
        cfg.commands = 20;
        Generator::new(seed, cfg).run(|step| {
            let before = step.engine.state().canonical_bytes();
            let one = step.engine.prepare(step.command);
            let two = step.engine.prepare(step.command);
            assert_eq!(one, two);
            assert_eq!(step.engine.state().canonical_bytes(), before);
        });
    }

    #[test]
    fn everyone_stays_strictly_hardest(seed in any::<u64>()) {
        let mut cfg = WorldConfig::small();
        cfg.override_chance = 0.6;
        Generator::new(seed, cfg).run(|step| {
            checks::everyone_is_hardest(step.engine).unwrap();
        });
    }
}
