//! Runs a script's steps in order against a backend and checks every
//! expectation, stopping at the first mismatch.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use burst_core::{ChannelId, Event, EventKind, PostId};

use crate::backend::{Actor, Backend, Failure, Reply};
use crate::dump::format_event;
use crate::script::{Action, CountArgs, Expect, Op, ScriptConfig, Step};

/// What the log shows for a failed step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    /// Events the step appended; the first is where the run diverged.
    Events(Vec<Event>),
    /// The step appended nothing.
    Nothing,
    /// The backend cannot read its log.
    Unavailable,
}

#[derive(Debug, Clone)]
pub struct Mismatch {
    pub step: String,
    pub actor: String,
    pub action: String,
    pub expected: String,
    pub got: String,
    pub divergence: Divergence,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} {}: expectation not met",
            self.step, self.actor, self.action
        )?;
        writeln!(f, "  expected: {}", self.expected)?;
        writeln!(f, "  got:      {}", self.got)?;
        match &self.divergence {
            Divergence::Events(evs) => {
                write!(f, "  first divergent event:\n  {}", format_event(&evs[0]))?;
                if evs.len() > 1 {
                    write!(f, "\n  (and {} more from this step)", evs.len() - 1)?;
                }
                Ok(())
            }
            Divergence::Nothing => write!(f, "  the step appended no events"),
            Divergence::Unavailable => write!(f, "  event log not readable from here"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DriveError {
    /// The script itself is unusable at this step.
    #[error("{step}: {message}")]
    Script { step: String, message: String },
    #[error("{0}")]
    Mismatch(Box<Mismatch>),
    #[error("{step}: transport error: {message}")]
    Transport { step: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub steps: usize,
    pub last_seq: u64,
}

pub struct Driver<B> {
    backend: B,
    labels: HashMap<String, PostId>,
    passwords: HashMap<String, String>,
    default_password: String,
}

impl<B: Backend> Driver<B> {
    pub fn new(backend: B, config: &ScriptConfig) -> Self {
        Driver {
            backend,
            labels: HashMap::new(),
            passwords: HashMap::new(),
            default_password: config.password().to_string(),
        }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    /// The post a label names, or a literal id such as `p3`.
    pub fn post(&self, label: &str) -> Option<PostId> {
        self.labels
            .get(label)
            .copied()
            .or_else(|| label.parse().ok())
    }

    /// Runs every step, calling `report` with each step and what it returned.
    pub fn run(
        &mut self,
        steps: &[Step],
        mut report: impl FnMut(&Step, &str),
    ) -> Result<Summary, DriveError> {
        for step in steps {
            let seen = self.step(step)?;
            report(step, &seen);
        }
        let last_seq = self.backend.last_seq().map_err(|e| DriveError::Transport {
            step: "after the last step".into(),
            message: e.to_string(),
        })?;
        Ok(Summary {
            steps: steps.len(),
            last_seq,
        })
    }

    /// Runs one step. Returns a short description of what came back.
    pub fn step(&mut self, step: &Step) -> Result<String, DriveError> {
        let transport = |e: Failure| DriveError::Transport {
            step: step.describe(),
            message: e.to_string(),
        };
        let before = self.backend.last_seq().map_err(transport)?;
        let op: Op = step.action.clone().map_posts(|label| {
            self.post(&label).ok_or_else(|| DriveError::Script {
                step: step.describe(),
                message: format!("no post labelled {label:?}"),
            })
        })?;
        let password = self
            .passwords
            .get(&step.actor)
            .cloned()
            .unwrap_or_else(|| self.default_password.clone());
        let actor = Actor {
            handle: &step.actor,
            password: &password,
        };
        let result = match &op {
            Action::CountEvents(args) => self.count(step, args)?,
            _ => self.backend.perform(actor, &op),
        };
        if let Err(Failure::Transport(_)) = &result {
            return Err(transport(result.unwrap_err()));
        }
        if let Ok(reply) = &result {
            self.remember(step, reply);
        }
        match self.check(step, &result)? {
            Ok(seen) => Ok(seen),
            Err(got) => {
                let divergence = match self.backend.events_after(before) {
                    None | Some(Err(_)) => Divergence::Unavailable,
                    Some(Ok(evs)) if evs.is_empty() => Divergence::Nothing,
                    Some(Ok(evs)) => Divergence::Events(evs),
                };
                Err(DriveError::Mismatch(Box::new(Mismatch {
                    step: step.describe(),
                    actor: step.actor.clone(),
                    action: step.action.name().to_string(),
                    expected: step.expect.to_string(),
                    got,
                    divergence,
                })))
            }
        }
    }

    fn remember(&mut self, step: &Step, reply: &Reply) {
        match (&step.action, reply) {
            (Action::Post(p), Reply::Post(id)) => {
                if let Some(label) = &p.label {
                    self.labels.insert(label.clone(), *id);
                }
            }
            (Action::Signup(a) | Action::Bootstrap(a), Reply::User(_)) => {
                if let Some(pw) = &a.password {
                    self.passwords.insert(step.actor.clone(), pw.clone());
                }
            }
            _ => {}
        }
    }

    fn count(
        &mut self,
        step: &Step,
        args: &CountArgs<PostId>,
    ) -> Result<Result<Reply, Failure>, DriveError> {
        let events = match self.backend.events_after(0) {
            Some(Ok(evs)) => evs,
            Some(Err(e)) => {
                return Ok(Err(Failure::Transport(format!("reading the log: {e}"))));
            }
            None => {
                return Err(DriveError::Script {
                    step: step.describe(),
                    message: "count_events needs the event log; replay against the embedded server or in-process"
                        .into(),
                })
            }
        };
        let mut names: HashMap<ChannelId, String> = HashMap::new();
        for ev in &events {
            if let EventKind::ChannelCreated { channel, name, .. } = &ev.kind {
                names.insert(*channel, name.clone());
            }
        }
        let mut total = 0;
        let mut by_channel = BTreeMap::new();
        for ev in &events {
            if ev.kind.name() != args.kind {
                continue;
            }
            let value = serde_json::to_value(&ev.kind).unwrap_or_default();
            if let Some(post) = args.post {
                if value.get("post").and_then(|p| p.as_u64()) != Some(post.0) {
                    continue;
                }
            }
            total += 1;
            if let Some(c) = value.get("channel").and_then(|c| c.as_u64()) {
                let name = names
                    .get(&ChannelId(c))
                    .cloned()
                    .unwrap_or_else(|| ChannelId(c).to_string());
                *by_channel.entry(name).or_insert(0) += 1;
            }
        }
        Ok(Ok(Reply::Counts { total, by_channel }))
    }

    /// `Ok(Ok(seen))` when the expectation holds, `Ok(Err(got))` when not.
    fn check(
        &self,
        step: &Step,
        result: &Result<Reply, Failure>,
    ) -> Result<Result<String, String>, DriveError> {
        let got = match result {
            Ok(r) => describe(r),
            Err(Failure::Rejected { code, message }) => format!("error:{code} ({message})"),
            Err(Failure::Transport(t)) => t.clone(),
        };
        let holds = match (&step.expect, result) {
            (Expect::Error(want), Err(Failure::Rejected { code, .. })) => want == code,
            (_, Err(_)) => false,
            (Expect::Error(_), Ok(_)) => false,
            (Expect::Ok, Ok(_)) => true,
            (Expect::Outcomes { pairs, exact }, Ok(Reply::Bursts(list))) => {
                if *exact {
                    pairs == list
                } else {
                    pairs.iter().all(|(c, o)| {
                        let mine: Vec<&String> = list
                            .iter()
                            .filter(|(n, _)| n == c)
                            .map(|(_, o)| o)
                            .collect();
                        !mine.is_empty() && mine.iter().all(|m| *m == o)
                    })
                }
            }
            (Expect::Post(want), Ok(Reply::View(view))) => {
                let order: Vec<String> = view.burst_into.iter().map(|b| b.name.clone()).collect();
                want.burst_into.as_ref().is_none_or(|w| *w == order)
                    && want.deleted.is_none_or(|d| d == view.deleted)
                    && want.body.as_ref().is_none_or(|b| *b == view.body)
            }
            (Expect::Feed(want), Ok(Reply::Feed(ids))) => {
                let resolve = |labels: &[String]| -> Result<Vec<PostId>, DriveError> {
                    labels
                        .iter()
                        .map(|l| {
                            self.post(l).ok_or_else(|| DriveError::Script {
                                step: step.describe(),
                                message: format!("no post labelled {l:?}"),
                            })
                        })
                        .collect()
                };
                let includes = resolve(&want.includes)?;
                let excludes = resolve(&want.excludes)?;
                let equals = want.equals.as_deref().map(resolve).transpose()?;
                includes.iter().all(|p| ids.contains(p))
                    && !excludes.iter().any(|p| ids.contains(p))
                    && equals.is_none_or(|e| e == *ids)
            }
            (Expect::Options(want), Ok(Reply::Options(options))) => {
                let seen: BTreeMap<String, String> = options
                    .iter()
                    .map(|o| (o.name.clone(), format!("{}/{}", o.votes, o.threshold)))
                    .collect();
                *want == seen
            }
            (Expect::Count(n), Ok(Reply::Counts { total, .. })) => n == total,
            (Expect::CountByChannel(want), Ok(Reply::Counts { by_channel, .. })) => {
                want == by_channel
            }
            (_, Ok(_)) => false,
        };
        Ok(if holds { Ok(got) } else { Err(got) })
    }
}

fn describe(reply: &Reply) -> String {
    match reply {
        Reply::Done => "ok".into(),
        Reply::User(u) => u.to_string(),
        Reply::Channel(c) => c.to_string(),
        Reply::Post(p) => p.to_string(),
        Reply::Bursts(list) => {
            let parts: Vec<String> = list.iter().map(|(c, o)| format!("{c}: {o}")).collect();
            format!("{{{}}}", parts.join(", "))
        }
        Reply::View(v) => {
            let order: Vec<&str> = v.burst_into.iter().map(|b| b.name.as_str()).collect();
            format!(
                "{} burst_into=[{}] deleted={}",
                v.id,
                order.join(", "),
                v.deleted
            )
        }
        Reply::Feed(ids) => {
            let ids: Vec<String> = ids.iter().map(|p| p.to_string()).collect();
            format!("[{}]", ids.join(", "))
        }
        Reply::Options(options) => {
            let parts: Vec<String> = options
                .iter()
                .map(|o| format!("{} {}/{}", o.name, o.votes, o.threshold))
                .collect();
            format!("[{}]", parts.join(", "))
        }
        Reply::Counts { total, by_channel } => format!("{total} events {by_channel:?}"),
    }
}
