//! Turns seeded generator runs into replay scripts whose expectations are
//! what the generator's own engine returned.

#![allow(dead_code)]

use burst_core::{ChannelId, Command, Engine, Outcome, PostId, PostKind, UserId};
use burst_testkit::{Generator, WorldConfig};
use burstctl::script::RawStep;
use burstctl::{Script, ScriptConfig};
use serde_json::{json, Value};

fn handle(engine: &Engine, u: UserId) -> String {
    engine
        .state()
        .user(u)
        .map(|u| u.handle.clone())
        .unwrap_or_else(|| u.to_string())
}

fn channel(engine: &Engine, c: ChannelId) -> String {
    engine
        .state()
        .channel(c)
        .map(|c| c.name.clone())
        .unwrap_or_else(|| c.to_string())
}

fn post(p: PostId) -> String {
    p.to_string()
}

fn yaml(v: Value) -> serde_yaml::Value {
    serde_yaml::to_value(v).expect("json is yaml")
}

/// The script step equivalent to `cmd`, run on `engine` after the fact.
pub fn step_for(cmd: &Command, engine: &Engine) -> RawStep {
    let h = |u: &UserId| handle(engine, *u);
    let c = |ch: &ChannelId| channel(engine, *ch);
    let (actor, action, args) = match cmd {
        Command::Bootstrap {
            admin_handle,
            display_name,
            ..
        } => (
            admin_handle.clone(),
            "bootstrap",
            json!({"display_name": display_name}),
        ),
        Command::CreateUser {
            handle,
            display_name,
            ..
        } => (
            handle.clone(),
            "signup",
            json!({"display_name": display_name}),
        ),
        Command::CreateChannel {
            creator,
            name,
            description,
            threshold_override,
        } => (
            h(creator),
            "create_channel",
            json!({"name": name, "description": description, "threshold_override": threshold_override}),
        ),
        Command::JoinChannel { user, channel } => (h(user), "join", json!({"channel": c(channel)})),
        Command::LeaveChannel { user, channel } => {
            (h(user), "leave", json!({"channel": c(channel)}))
        }
        Command::InviteToTeam { owner, invitee } => {
            (h(owner), "invite", json!({"user": h(invitee)}))
        }
        Command::AcceptTeamInvite { invitee, owner } => {
            (h(invitee), "accept_invite", json!({"owner": h(owner)}))
        }
        Command::DeclineTeamInvite { invitee, owner } => {
            (h(invitee), "decline_invite", json!({"owner": h(owner)}))
        }
        Command::RemoveTeamMember { owner, member } => {
            (h(owner), "remove_member", json!({"user": h(member)}))
        }
        Command::LeaveTeam { member, owner } => {
            (h(member), "leave_team", json!({"owner": h(owner)}))
        }
        Command::CreatePost(new) => {
            let mut args = json!({
                "body": new.body,
                "suggest": new.suggested.iter().map(c).collect::<Vec<_>>(),
                "block": new.blocked.iter().map(c).collect::<Vec<_>>(),
            });
            match new.kind {
                PostKind::Reply => args["reply_to"] = json!(new.parent.map(post)),
                PostKind::Quote => args["quote"] = json!(new.quoted.map(post)),
                PostKind::Original => {}
            }
            (h(&new.author), "post", args)
        }
        Command::CastBurst {
            voter,
            post: p,
            channels,
        } => (
            h(voter),
            "burst",
            json!({"post": post(*p), "channels": channels.iter().map(c).collect::<Vec<_>>()}),
        ),
        Command::RetractFromChannel {
            author,
            post: p,
            channel,
        } => (
            h(author),
            "retract",
            json!({"post": post(*p), "channel": c(channel)}),
        ),
        Command::BlockChannel {
            author,
            post: p,
            channel,
        } => (
            h(author),
            "block",
            json!({"post": post(*p), "channel": c(channel)}),
        ),
        Command::AddReaction {
            user,
            post: p,
            emoji,
        } => (h(user), "react", json!({"post": post(*p), "emoji": emoji})),
        Command::RemoveReaction {
            user,
            post: p,
            emoji,
        } => (
            h(user),
            "unreact",
            json!({"post": post(*p), "emoji": emoji}),
        ),
        Command::DeletePost { author, post: p } => (h(author), "delete", json!({"post": post(*p)})),
        Command::AckNotification { user, notification } => {
            (h(user), "ack", json!({"notification": notification.0}))
        }
    };
    RawStep::new(actor, action, yaml(args))
}

/// What the generator's engine returned for a step, as a script
/// expectation.
pub fn expectation(s: &burst_testkit::Step<'_>) -> serde_yaml::Value {
    yaml(match s.result {
        Err(e) => json!(format!("error:{}", e.code())),
        Ok((Outcome::Bursts(list), _)) => json!(list
            .iter()
            .map(|o| json!([channel(s.engine, o.channel), o.result.to_string()]))
            .collect::<Vec<_>>()),
        Ok(_) => json!("ok"),
    })
}

/// A script over `steps` with onboarding off, so every command reaches
/// the engine.
pub fn script(name: String, steps: Vec<RawStep>) -> Script {
    let config: ScriptConfig =
        serde_yaml::from_str("onboarding: {enabled: false, min_team: 0, min_channels: 0}")
            .expect("valid config");
    Script {
        name,
        description: String::new(),
        config,
        steps,
    }
}

/// A script replaying generator world `seed`, expecting exactly what the
/// generator's engine returned for each command.
pub fn generated(seed: u64, cfg: WorldConfig) -> Script {
    let mut steps = Vec::new();
    Generator::new(seed, cfg).run(|s| {
        steps.push(step_for(s.command, s.engine).expect(expectation(&s)));
    });
    script(format!("generated-{seed}"), steps)
}
