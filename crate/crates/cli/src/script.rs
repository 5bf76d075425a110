//! Replay scripts.
//!
//! A script is a YAML document naming a server configuration and an ordered
//! list of steps. Each step has an `actor` (a handle), an `action`, the
//! action's `args`, and an optional `expect`:
//!
//! ```yaml
//! name: two votes
//! config:
//!   onboarding: {enabled: false}
//! steps:
//!   - {actor: admin, action: bootstrap}
//!   - {actor: admin, action: create_channel, args: {name: "#ideas", threshold_override: 2}}
//!   - {actor: ana, action: signup}
//!   - {actor: ana, action: join, args: {channel: "#ideas"}}
//!   - actor: ana
//!     action: post
//!     args: {label: hello, body: "hi there", suggest: ["#ideas"]}
//!   - repeat: {var: i, from: 1, to: 2}
//!     actor: "reader-{i}"
//!     action: signup
//!   - {actor: reader-1, action: join, args: {channel: "#ideas"}}
//!   - actor: reader-1
//!     action: burst
//!     args: {post: hello, channels: ["#ideas"]}
//!     expect: {"#ideas": "rejected:not_member"}
//! ```
//!
//! `expect` may be omitted or `ok` (the step must succeed), `error:<Code>`
//! (it must fail with that code), or an action-specific mapping described
//! on [`Expect`]. A step with `repeat` runs once per value of `var`, with
//! `{var}`, `{var+k}` and `{var-k}` substituted in every string.

use std::collections::BTreeMap;
use std::fmt;

use burst_api::config::{OnboardingConfig, TeamConfig, ThresholdConfig};
use burst_api::Config;
use burst_core::PostId;
use serde::{Deserialize, Serialize};
use serde_yaml::Value;

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("invalid script: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub config: ScriptConfig,
    pub steps: Vec<RawStep>,
}

/// Server settings the script runs under. Unset fields keep the server
/// defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team: Option<TeamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onboarding: Option<OnboardingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emoji_allowlist: Option<Vec<String>>,
    /// Password for every actor that does not choose one at signup.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
}

impl ScriptConfig {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(t) = &self.threshold {
            cfg.threshold = t.clone();
        }
        if let Some(t) = &self.team {
            cfg.team = t.clone();
        }
        if let Some(o) = &self.onboarding {
            cfg.onboarding = o.clone();
        }
        if let Some(e) = &self.emoji_allowlist {
            cfg.emoji_allowlist = e.clone();
        }
    }

    pub fn password(&self) -> &str {
        self.password.as_deref().unwrap_or("burst-password")
    }
}

/// A step as written, before `repeat` expansion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<Repeat>,
    pub actor: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub args: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Value>,
}

impl RawStep {
    pub fn new(actor: impl Into<String>, action: &str, args: Value) -> Self {
        RawStep {
            repeat: None,
            actor: actor.into(),
            action: action.into(),
            args,
            expect: None,
        }
    }

    pub fn expect(mut self, expect: Value) -> Self {
        self.expect = Some(expect);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Repeat {
    pub var: String,
    pub from: i64,
    pub to: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Account {
    #[serde(default)]
    pub password: Option<String>,
    #[serde(default)]
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewChannel {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub threshold_override: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelArg {
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserArg {
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnerArg {
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostArg<P> {
    pub post: P,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostChannel<P> {
    pub post: P,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reaction<P> {
    pub post: P,
    pub emoji: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstArgs<P> {
    pub post: P,
    pub channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "P: Deserialize<'de>"))]
pub struct PostArgs<P> {
    /// Name later steps use to refer to this post.
    #[serde(default)]
    pub label: Option<String>,
    pub body: String,
    #[serde(default)]
    pub suggest: Vec<String>,
    #[serde(default)]
    pub block: Vec<String>,
    #[serde(default)]
    pub reply_to: Option<P>,
    #[serde(default)]
    pub quote: Option<P>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckArg {
    pub notification: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedArg {
    #[serde(default)]
    pub channel: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "P: Deserialize<'de>"))]
pub struct CountArgs<P> {
    /// Event type name, such as `PostBurst`.
    pub kind: String,
    #[serde(default)]
    pub post: Option<P>,
}

/// What a step does. `P` is how posts are named: labels (`String`) in a
/// parsed script, ids once the driver has resolved them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "args", rename_all = "snake_case")]
pub enum Action<P = String> {
    Bootstrap(Account),
    Signup(Account),
    CreateChannel(NewChannel),
    Join(ChannelArg),
    Leave(ChannelArg),
    Invite(UserArg),
    AcceptInvite(OwnerArg),
    DeclineInvite(OwnerArg),
    RemoveMember(UserArg),
    LeaveTeam(OwnerArg),
    Post(PostArgs<P>),
    Burst(BurstArgs<P>),
    Retract(PostChannel<P>),
    Block(PostChannel<P>),
    React(Reaction<P>),
    Unreact(Reaction<P>),
    Delete(PostArg<P>),
    Ack(AckArg),
    ViewPost(PostArg<P>),
    Feed(FeedArg),
    BurstOptions(PostArg<P>),
    /// Counts matching events in the log. Needs log access.
    CountEvents(CountArgs<P>),
}

impl<P> Action<P> {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Bootstrap(_) => "bootstrap",
            Action::Signup(_) => "signup",
            Action::CreateChannel(_) => "create_channel",
            Action::Join(_) => "join",
            Action::Leave(_) => "leave",
            Action::Invite(_) => "invite",
            Action::AcceptInvite(_) => "accept_invite",
            Action::DeclineInvite(_) => "decline_invite",
            Action::RemoveMember(_) => "remove_member",
            Action::LeaveTeam(_) => "leave_team",
            Action::Post(_) => "post",
            Action::Burst(_) => "burst",
            Action::Retract(_) => "retract",
            Action::Block(_) => "block",
            Action::React(_) => "react",
            Action::Unreact(_) => "unreact",
            Action::Delete(_) => "delete",
            Action::Ack(_) => "ack",
            Action::ViewPost(_) => "view_post",
            Action::Feed(_) => "feed",
            Action::BurstOptions(_) => "burst_options",
            Action::CountEvents(_) => "count_events",
        }
    }

    /// Rewrites every post reference with `f`.
    pub fn map_posts<Q, E>(self, mut f: impl FnMut(P) -> Result<Q, E>) -> Result<Action<Q>, E> {
        Ok(match self {
            Action::Bootstrap(a) => Action::Bootstrap(a),
            Action::Signup(a) => Action::Signup(a),
            Action::CreateChannel(a) => Action::CreateChannel(a),
            Action::Join(a) => Action::Join(a),
            Action::Leave(a) => Action::Leave(a),
            Action::Invite(a) => Action::Invite(a),
            Action::AcceptInvite(a) => Action::AcceptInvite(a),
            Action::DeclineInvite(a) => Action::DeclineInvite(a),
            Action::RemoveMember(a) => Action::RemoveMember(a),
            Action::LeaveTeam(a) => Action::LeaveTeam(a),
            Action::Post(a) => Action::Post(PostArgs {
                label: a.label,
                body: a.body,
                suggest: a.suggest,
                block: a.block,
                reply_to: a.reply_to.map(&mut f).transpose()?,
                quote: a.quote.map(&mut f).transpose()?,
            }),
            Action::Burst(a) => Action::Burst(BurstArgs {
                post: f(a.post)?,
                channels: a.channels,
            }),
            Action::Retract(a) => Action::Retract(PostChannel {
                post: f(a.post)?,
                channel: a.channel,
            }),
            Action::Block(a) => Action::Block(PostChannel {
                post: f(a.post)?,
                channel: a.channel,
            }),
            Action::React(a) => Action::React(Reaction {
                post: f(a.post)?,
                emoji: a.emoji,
            }),
            Action::Unreact(a) => Action::Unreact(Reaction {
                post: f(a.post)?,
                emoji: a.emoji,
            }),
            Action::Delete(a) => Action::Delete(PostArg { post: f(a.post)? }),
            Action::Ack(a) => Action::Ack(a),
            Action::ViewPost(a) => Action::ViewPost(PostArg { post: f(a.post)? }),
            Action::Feed(a) => Action::Feed(a),
            Action::BurstOptions(a) => Action::BurstOptions(PostArg { post: f(a.post)? }),
            Action::CountEvents(a) => Action::CountEvents(CountArgs {
                kind: a.kind,
                post: a.post.map(&mut f).transpose()?,
            }),
        })
    }
}

/// Resolved `action` for the engine-facing backends.
pub type Op = Action<PostId>;

/// What a step must produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expect {
    /// Any success.
    Ok,
    /// Failure with this error code.
    Error(String),
    /// `burst`: per-channel outcome strings such as `progress 3/10`. A
    /// mapping checks the channels it names; a list of `[channel, outcome]`
    /// pairs must match the response exactly.
    Outcomes {
        pairs: Vec<(String, String)>,
        exact: bool,
    },
    /// `view_post`: fields of the post view.
    Post(PostExpect),
    /// `feed`: post labels that must or must not appear, or the exact list.
    Feed(FeedExpect),
    /// `burst_options`: `channel -> "votes/threshold"`, exactly.
    Options(BTreeMap<String, String>),
    /// `count_events`: a total, or counts per channel name.
    Count(u64),
    CountByChannel(BTreeMap<String, u64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostExpect {
    /// Channel names in burst order.
    #[serde(default)]
    pub burst_into: Option<Vec<String>>,
    #[serde(default)]
    pub deleted: Option<bool>,
    #[serde(default)]
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedExpect {
    #[serde(default)]
    pub includes: Vec<String>,
    #[serde(default)]
    pub excludes: Vec<String>,
    /// The whole feed, newest first.
    #[serde(default)]
    pub equals: Option<Vec<String>>,
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Ok => f.write_str("ok"),
            Expect::Error(code) => write!(f, "error:{code}"),
            Expect::Outcomes { pairs, .. } => {
                let parts: Vec<String> = pairs.iter().map(|(c, o)| format!("{c}: {o}")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            Expect::Post(p) => write!(f, "{p:?}"),
            Expect::Feed(x) => write!(f, "{x:?}"),
            Expect::Options(m) => write!(f, "{m:?}"),
            Expect::Count(n) => write!(f, "{n} events"),
            Expect::CountByChannel(m) => write!(f, "{m:?}"),
        }
    }
}

/// One step ready to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// 1-based position in the script's step list.
    pub index: usize,
    /// Loop variable and value, for repeated steps.
    pub iteration: Option<(String, i64)>,
    pub actor: String,
    pub action: Action,
    pub expect: Expect,
}

impl Step {
    pub fn describe(&self) -> String {
        match &self.iteration {
            Some((var, v)) => format!("step {} ({var}={v})", self.index),
            None => format!("step {}", self.index),
        }
    }
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        Ok(serde_yaml::from_str(text)?)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("scripts serialize")
    }

    /// Expands repeats and parses every step's action and expectation.
    pub fn steps(&self) -> Result<Vec<Step>, ScriptError> {
        let mut out = Vec::new();
        for (i, raw) in self.steps.iter().enumerate() {
            let index = i + 1;
            let err = |message: String| ScriptError::Step {
                step: index,
                message,
            };
            match &raw.repeat {
                None => out.push(build(index, None, raw).map_err(err)?),
                Some(r) => {
                    if r.var.is_empty()
                        || !r.var.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    {
                        return Err(err(format!("bad repeat variable {:?}", r.var)));
                    }
                    for v in r.from..=r.to {
                        let expanded = substitute_step(raw, &r.var, v).map_err(err)?;
                        out.push(build(index, Some((r.var.clone(), v)), &expanded).map_err(err)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn build(index: usize, iteration: Option<(String, i64)>, raw: &RawStep) -> Result<Step, String> {
    let args = match &raw.args {
        Value::Null => Value::Mapping(Default::default()),
        a => a.clone(),
    };
    let mut tagged = serde_yaml::Mapping::new();
    tagged.insert("action".into(), Value::String(raw.action.clone()));
    tagged.insert("args".into(), args);
    let action: Action = serde_yaml::from_value(Value::Mapping(tagged))
        .map_err(|e| format!("action {}: {e}", raw.action))?;
    let expect = parse_expect(&action, raw.expect.as_ref())?;
    Ok(Step {
        index,
        iteration,
        actor: raw.actor.clone(),
        action,
        expect,
    })
}

fn parse_expect(action: &Action, raw: Option<&Value>) -> Result<Expect, String> {
    let Some(raw) = raw else {
        return Ok(Expect::Ok);
    };
    if let Value::String(s) = raw {
        if s == "ok" {
            return Ok(Expect::Ok);
        }
        if let Some(code) = s.strip_prefix("error:") {
            return Ok(Expect::Error(code.trim().to_string()));
        }
    }
    let bad = |e: serde_yaml::Error| format!("expect for {}: {e}", action.name());
    match action {
        Action::Burst(_) => match raw {
            Value::Mapping(_) => {
                let m: serde_yaml::Mapping = serde_yaml::from_value(raw.clone()).map_err(bad)?;
                let mut pairs = Vec::new();
                for (k, v) in m {
                    match (k, v) {
                        (Value::String(k), Value::String(v)) => pairs.push((k, v)),
                        (k, v) => return Err(format!("expect entry {k:?}: {v:?} is not text")),
                    }
                }
                Ok(Expect::Outcomes {
                    pairs,
                    exact: false,
                })
            }
            _ => {
                let pairs: Vec<(String, String)> =
                    serde_yaml::from_value(raw.clone()).map_err(bad)?;
                Ok(Expect::Outcomes { pairs, exact: true })
            }
        },
        Action::ViewPost(_) => Ok(Expect::Post(
            serde_yaml::from_value(raw.clone()).map_err(bad)?,
        )),
        Action::Feed(_) => Ok(Expect::Feed(
            serde_yaml::from_value(raw.clone()).map_err(bad)?,
        )),
        Action::BurstOptions(_) => Ok(Expect::Options(
            serde_yaml::from_value(raw.clone()).map_err(bad)?,
        )),
        Action::CountEvents(_) => match raw {
            Value::Number(_) => Ok(Expect::Count(
                serde_yaml::from_value(raw.clone()).map_err(bad)?,
            )),
            _ => Ok(Expect::CountByChannel(
                serde_yaml::from_value(raw.clone()).map_err(bad)?,
            )),
        },
        _ => Err(format!(
            "{} takes no expectation besides ok or error:<Code>, got {raw:?}",
            action.name()
        )),
    }
}

fn substitute_step(raw: &RawStep, var: &str, v: i64) -> Result<RawStep, String> {
    Ok(RawStep {
        repeat: None,
        actor: substitute(&raw.actor, var, v)?,
        action: raw.action.clone(),
        args: substitute_value(&raw.args, var, v)?,
        expect: raw
            .expect
            .as_ref()
            .map(|e| substitute_value(e, var, v))
            .transpose()?,
    })
}

fn substitute_value(value: &Value, var: &str, v: i64) -> Result<Value, String> {
    Ok(match value {
        Value::String(s) => {
            let text = substitute(s, var, v)?;
            // A string that was only a placeholder becomes a number.
            if s.starts_with('{') && s.ends_with('}') && s.matches('{').count() == 1 {
                match text.parse::<i64>() {
                    Ok(n) => Value::Number(n.into()),
                    Err(_) => Value::String(text),
                }
            } else {
                Value::String(text)
            }
        }
        Value::Sequence(items) => Value::Sequence(
            items
                .iter()
                .map(|i| substitute_value(i, var, v))
                .collect::<Result<_, _>>()?,
        ),
        Value::Mapping(m) => {
            let mut out = serde_yaml::Mapping::new();
            for (k, val) in m {
                out.insert(substitute_value(k, var, v)?, substitute_value(val, var, v)?);
            }
            Value::Mapping(out)
        }
        other => other.clone(),
    })
}

/// Replaces `{var}`, `{var+k}` and `{var-k}` in `text`. Other braces are
/// left alone.
pub fn substitute(text: &str, var: &str, v: i64) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let Some(end) = after.find('}') else {
            out.push_str(&rest[start..]);
            return Ok(out);
        };
        let inner = after[..end].trim();
        match inner.strip_prefix(var) {
            Some(tail) => {
                let tail = tail.trim();
                let n = if tail.is_empty() {
                    v
                } else if let Some(k) = tail.strip_prefix('+') {
                    v + k
                        .trim()
                        .parse::<i64>()
                        .map_err(|_| format!("bad offset in {{{inner}}}"))?
                } else if let Some(k) = tail.strip_prefix('-') {
                    v - k
                        .trim()
                        .parse::<i64>()
                        .map_err(|_| format!("bad offset in {{{inner}}}"))?
                } else {
                    out.push('{');
                    out.push_str(&after[..end]);
                    out.push('}');
                    rest = &after[end + 1..];
                    continue;
                };
                out.push_str(&n.to_string());
            }
            None => {
                out.push('{');
                out.push_str(&after[..end]);
                out.push('}');
            }
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution() {
        assert_eq!(substitute("reader-{i}", "i", 7).unwrap(), "reader-7");
        assert_eq!(
            substitute("progress {i+5}/10", "i", 3).unwrap(),
            "progress 8/10"
        );
        assert_eq!(substitute("{i-1}", "i", 3).unwrap(), "2");
        assert_eq!(substitute("{j} and {", "i", 3).unwrap(), "{j} and {");
        assert!(substitute("{i+x}", "i", 3).is_err());
    }

    #[test]
    fn repeats_expand_and_parse() {
        let s = Script::parse(
            r##"
name: t
steps:
  - {actor: admin, action: bootstrap}
  - repeat: {var: n, from: 1, to: 3}
    actor: "r{n}"
    action: burst
    args: {post: idea, channels: ["#a"]}
    expect: {"#a": "progress {n}/3"}
  - actor: r1
    action: feed
    args: {channel: "#a"}
    expect: "error:NotAMember"
"##,
        )
        .unwrap();
        let steps = s.steps().unwrap();
        assert_eq!(steps.len(), 5);
        assert_eq!(steps[0].action, Action::Bootstrap(Account::default()));
        assert_eq!(steps[3].actor, "r3");
        assert_eq!(steps[3].iteration, Some(("n".into(), 3)));
        assert_eq!(
            steps[3].expect,
            Expect::Outcomes {
                pairs: vec![("#a".into(), "progress 3/3".into())],
                exact: false
            }
        );
        assert_eq!(steps[4].expect, Expect::Error("NotAMember".into()));
    }

    #[test]
    fn bad_steps_name_their_position() {
        let s = Script::parse("name: t\nsteps:\n  - {actor: a, action: fly}\n").unwrap();
        match s.steps() {
            Err(ScriptError::Step { step: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let s = Script::parse(
            "name: t\nsteps:\n  - {actor: a, action: join, args: {channel: x, extra: 1}}\n",
        )
        .unwrap();
        assert!(s.steps().is_err());
        let s = Script::parse(
            "name: t\nsteps:\n  - {actor: a, action: join, args: {channel: x}, expect: {a: b}}\n",
        )
        .unwrap();
        assert!(s.steps().is_err());
    }

    #[test]
    fn yaml_round_trip() {
        let mut s = Script {
            name: "x".into(),
            description: String::new(),
            config: ScriptConfig::default(),
            steps: vec![RawStep::new("admin", "bootstrap", Value::Null)],
        };
        s.steps.push(
            RawStep::new(
                "a",
                "burst",
                serde_yaml::from_str("{post: p1, channels: ['#a', '#a']}").unwrap(),
            )
            .expect(serde_yaml::from_str("[['#a', burst], ['#a', already_voted]]").unwrap()),
        );
        let back = Script::parse(&s.to_yaml()).unwrap();
        assert_eq!(back.steps().unwrap(), s.steps().unwrap());
    }
}
