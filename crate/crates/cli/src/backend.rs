//! Where script actions run: a live server over HTTP, or an in-process
//! engine that applies the same request semantics without the transport.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use burst_api::config::OnboardingConfig;
use burst_api::dto::{BurstResponse, ChannelCreated, PostCreated, UserCreated};
use burst_api::resolve::{channel_ref, user_ref};
use burst_api::{credential_for, onboarding_gate, ApiError, Config, ConfigError};
use burst_core::{
    BurstOption, ChannelId, Command, CoreError, Engine, Event, EventSeq, FeedPage, FeedQuery,
    NewPost, NotificationId, Outcome, PostId, PostKind, PostView, UserId, MAX_PAGE_SIZE,
};
use burst_store::DataDir;
use serde_json::json;

use crate::client::{enc, Client, ClientError};
use crate::script::{Account, Action, Op, PostArgs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Done,
    User(UserId),
    Channel(ChannelId),
    Post(PostId),
    /// `(channel name, outcome)` per requested channel, in request order.
    Bursts(Vec<(String, String)>),
    View(Box<PostView>),
    /// Every post in the feed, newest first, replies after their parent.
    Feed(Vec<PostId>),
    Options(Vec<BurstOption>),
    /// Matching events in the log, in total and per channel name.
    Counts {
        total: u64,
        by_channel: BTreeMap<String, u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Failure {
    /// The request was answered with an error code.
    #[error("{code}: {message}")]
    Rejected { code: String, message: String },
    #[error("{0}")]
    Transport(String),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Rejected {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure::Rejected {
            code: e.code.to_string(),
            message: e.message,
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Api { code, message, .. } => Failure::Rejected { code, message },
            ClientError::Transport(t) => Failure::Transport(t),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Actor<'a> {
    pub handle: &'a str,
    pub password: &'a str,
}

pub trait Backend {
    /// Runs one action as `actor`. `count_events` is not an action here;
    /// the driver answers it from [`Backend::events_after`].
    fn perform(&mut self, actor: Actor<'_>, op: &Op) -> Result<Reply, Failure>;

    /// Seq of the newest event.
    fn last_seq(&mut self) -> Result<u64, Failure>;

    /// Events with seq greater than `after`, or `None` when this backend
    /// cannot see the log.
    fn events_after(&mut self, after: u64) -> Option<Result<Vec<Event>, String>>;
}

fn post_kind<P>(args: &PostArgs<P>) -> PostKind {
    match (&args.reply_to, &args.quote) {
        (Some(_), _) => PostKind::Reply,
        (None, Some(_)) => PostKind::Quote,
        (None, None) => PostKind::Original,
    }
}

fn unsupported(op: &Op) -> Failure {
    Failure::Rejected {
        code: "Unsupported".into(),
        message: format!("{} is answered by the driver", op.name()),
    }
}

/// Talks to a server. Sessions are opened lazily, one per actor.
pub struct HttpBackend {
    client: Client,
    tokens: HashMap<String, String>,
    log: Option<DataDir>,
}

impl HttpBackend {
    /// `data_dir`, when the server's data directory is reachable, lets the
    /// driver read the event log.
    pub fn new(client: Client, data_dir: Option<PathBuf>) -> Self {
        HttpBackend {
            client,
            tokens: HashMap::new(),
            log: data_dir.map(DataDir::new),
        }
    }

    fn token(&mut self, actor: Actor<'_>) -> Result<String, Failure> {
        if let Some(t) = self.tokens.get(actor.handle) {
            return Ok(t.clone());
        }
        let t = self.client.login(actor.handle, actor.password)?;
        self.tokens.insert(actor.handle.to_string(), t.clone());
        Ok(t)
    }

    fn call<T: serde::de::DeserializeOwned>(
        &mut self,
        actor: Actor<'_>,
        method: &str,
        path: &str,
        body: Option<serde_json::Value>,
    ) -> Result<T, Failure> {
        let token = self.token(actor)?;
        Ok(self
            .client
            .send(method, path, Some(&token), body.as_ref())?)
    }

    fn done(
        &mut self,
        actor: Actor<'_>,
        method: &str,
        path: &str,
        body: Option<serde_json::Value>,
    ) -> Result<Reply, Failure> {
        self.call::<()>(actor, method, path, body)?;
        Ok(Reply::Done)
    }

    fn account(&mut self, path: &str, actor: Actor<'_>, a: &Account) -> Result<Reply, Failure> {
        let created: UserCreated = self.client.send(
            "POST",
            path,
            None,
            Some(&json!({
                "handle": actor.handle,
                "password": a.password.as_deref().unwrap_or(actor.password),
                "display_name": a.display_name,
            })),
        )?;
        Ok(Reply::User(created.user_id))
    }
}

impl Backend for HttpBackend {
    fn perform(&mut self, actor: Actor<'_>, op: &Op) -> Result<Reply, Failure> {
        match op {
            Action::Bootstrap(a) => self.account("/v1/bootstrap", actor, a),
            Action::Signup(a) => self.account("/v1/users", actor, a),
            Action::CreateChannel(c) => {
                let created: ChannelCreated = self.call(
                    actor,
                    "POST",
                    "/v1/channels",
                    Some(json!({
                        "name": c.name,
                        "description": c.description,
                        "threshold_override": c.threshold_override,
                    })),
                )?;
                Ok(Reply::Channel(created.channel_id))
            }
            Action::Join(c) => self.done(
                actor,
                "PUT",
                &format!("/v1/channels/{}/members/me", enc(&c.channel)),
                None,
            ),
            Action::Leave(c) => self.done(
                actor,
                "DELETE",
                &format!("/v1/channels/{}/members/me", enc(&c.channel)),
                None,
            ),
            Action::Invite(u) => self.done(
                actor,
                "POST",
                "/v1/team/invites",
                Some(json!({ "invitee": u.user })),
            ),
            Action::AcceptInvite(o) => self.done(
                actor,
                "POST",
                &format!("/v1/team/invites/{}/accept", enc(&o.owner)),
                None,
            ),
            Action::DeclineInvite(o) => self.done(
                actor,
                "POST",
                &format!("/v1/team/invites/{}/decline", enc(&o.owner)),
                None,
            ),
            Action::RemoveMember(u) => self.done(
                actor,
                "DELETE",
                &format!("/v1/team/members/{}", enc(&u.user)),
                None,
            ),
            Action::LeaveTeam(o) => self.done(
                actor,
                "DELETE",
                &format!("/v1/team/memberships/{}", enc(&o.owner)),
                None,
            ),
            Action::Post(p) => {
                let created: PostCreated = self.call(
                    actor,
                    "POST",
                    "/v1/posts",
                    Some(json!({
                        "body": p.body,
                        "kind": post_kind(p),
                        "parent": p.reply_to,
                        "quoted": p.quote,
                        "suggested": p.suggest,
                        "blocked": p.block,
                    })),
                )?;
                Ok(Reply::Post(created.post_id))
            }
            Action::Burst(b) => {
                let resp: BurstResponse = self.call(
                    actor,
                    "POST",
                    &format!("/v1/posts/{}/bursts", b.post.0),
                    Some(json!({ "channels": b.channels })),
                )?;
                Ok(Reply::Bursts(
                    resp.outcomes
                        .into_iter()
                        .map(|o| (o.name, o.outcome))
                        .collect(),
                ))
            }
            Action::Retract(r) => self.done(
                actor,
                "DELETE",
                &format!("/v1/posts/{}/channels/{}", r.post.0, enc(&r.channel)),
                None,
            ),
            Action::Block(b) => self.done(
                actor,
                "POST",
                &format!("/v1/posts/{}/blocked-channels", b.post.0),
                Some(json!({ "channel": b.channel })),
            ),
            Action::React(r) => self.done(
                actor,
                "PUT",
                &format!("/v1/posts/{}/reactions/{}", r.post.0, enc(&r.emoji)),
                None,
            ),
            Action::Unreact(r) => self.done(
                actor,
                "DELETE",
                &format!("/v1/posts/{}/reactions/{}", r.post.0, enc(&r.emoji)),
                None,
            ),
            Action::Delete(d) => {
                self.done(actor, "DELETE", &format!("/v1/posts/{}", d.post.0), None)
            }
            Action::Ack(a) => self.done(
                actor,
                "POST",
                &format!("/v1/notifications/{}/ack", a.notification),
                None,
            ),
            Action::ViewPost(p) => {
                let view: PostView =
                    self.call(actor, "GET", &format!("/v1/posts/{}", p.post.0), None)?;
                Ok(Reply::View(Box::new(view)))
            }
            Action::Feed(f) => {
                let mut ids = Vec::new();
                let mut cursor: Option<String> = None;
                loop {
                    let mut path = format!("/v1/feed?limit={MAX_PAGE_SIZE}");
                    if let Some(c) = &f.channel {
                        path.push_str(&format!("&channel={}", enc(c)));
                    }
                    if let Some(c) = &cursor {
                        path.push_str(&format!("&cursor={}", enc(c)));
                    }
                    let page: FeedPage = self.call(actor, "GET", &path, None)?;
                    ids.extend(page.post_ids());
                    match page.next_cursor {
                        Some(c) => cursor = Some(c.to_string()),
                        None => break,
                    }
                }
                Ok(Reply::Feed(ids))
            }
            Action::BurstOptions(p) => {
                let options: Vec<BurstOption> = self.call(
                    actor,
                    "GET",
                    &format!("/v1/posts/{}/burst-options", p.post.0),
                    None,
                )?;
                Ok(Reply::Options(options))
            }
            Action::CountEvents(_) => Err(unsupported(op)),
        }
    }

    fn last_seq(&mut self) -> Result<u64, Failure> {
        let health: burst_api::dto::Health = self.client.send("GET", "/v1/health", None, None)?;
        Ok(health.last_seq)
    }

    fn events_after(&mut self, after: u64) -> Option<Result<Vec<Event>, String>> {
        let dir = self.log.as_ref()?;
        Some(
            dir.replay(EventSeq(after + 1))
                .and_then(|it| it.collect::<Result<Vec<_>, _>>())
                .map_err(|e| e.to_string()),
        )
    }
}

/// Runs actions straight against an engine, resolving names and checking
/// passwords the way the server does.
pub struct DirectBackend {
    engine: Engine,
    events: Vec<Event>,
    onboarding: OnboardingConfig,
}

impl DirectBackend {
    pub fn new(config: &Config) -> Result<Self, ConfigError> {
        Ok(DirectBackend {
            engine: Engine::new(config.settings()?, config.engine_clock()),
            events: Vec::new(),
            onboarding: config.onboarding.clone(),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn login(&self, actor: Actor<'_>) -> Result<UserId, Failure> {
        self.engine
            .state()
            .user_by_handle(actor.handle)
            .filter(|u| u.credential == credential_for(actor.handle, actor.password))
            .map(|u| u.id)
            .ok_or_else(|| Failure::Rejected {
                code: "BadCredentials".into(),
                message: "wrong handle or password".into(),
            })
    }

    fn exec(&mut self, cmd: Command) -> Result<Outcome, Failure> {
        onboarding_gate(&self.engine, &self.onboarding, &cmd)?;
        let (outcome, events) = self.engine.execute(&cmd)?;
        self.events.extend(events);
        Ok(outcome)
    }

    fn done(&mut self, cmd: Command) -> Result<Reply, Failure> {
        self.exec(cmd)?;
        Ok(Reply::Done)
    }

    fn channel(&self, raw: &str) -> Result<ChannelId, Failure> {
        Ok(channel_ref(&self.engine, raw)?)
    }

    fn user(&self, raw: &str) -> Result<UserId, Failure> {
        Ok(user_ref(&self.engine, raw)?)
    }

    fn account(&mut self, actor: Actor<'_>, a: &Account, admin: bool) -> Result<Reply, Failure> {
        let handle = actor.handle.to_string();
        let display_name = a.display_name.clone().unwrap_or_else(|| handle.clone());
        let credential = credential_for(&handle, a.password.as_deref().unwrap_or(actor.password));
        let cmd = if admin {
            Command::Bootstrap {
                admin_handle: handle,
                display_name,
                credential,
            }
        } else {
            Command::CreateUser {
                handle,
                display_name,
                credential,
            }
        };
        match self.exec(cmd)? {
            Outcome::User(u) => Ok(Reply::User(u)),
            o => Err(Failure::Transport(format!("unexpected outcome {o:?}"))),
        }
    }
}

impl Backend for DirectBackend {
    fn perform(&mut self, actor: Actor<'_>, op: &Op) -> Result<Reply, Failure> {
        match op {
            Action::Bootstrap(a) => return self.account(actor, a, true),
            Action::Signup(a) => return self.account(actor, a, false),
            _ => {}
        }
        let me = self.login(actor)?;
        match op {
            Action::Bootstrap(_) | Action::Signup(_) => unreachable!("handled above"),
            Action::CreateChannel(c) => match self.exec(Command::CreateChannel {
                creator: me,
                name: c.name.clone(),
                description: c.description.clone(),
                threshold_override: c.threshold_override,
            })? {
                Outcome::Channel(id) => Ok(Reply::Channel(id)),
                o => Err(Failure::Transport(format!("unexpected outcome {o:?}"))),
            },
            Action::Join(c) => {
                let channel = self.channel(&c.channel)?;
                self.done(Command::JoinChannel { user: me, channel })
            }
            Action::Leave(c) => {
                let channel = self.channel(&c.channel)?;
                self.done(Command::LeaveChannel { user: me, channel })
            }
            Action::Invite(u) => {
                let invitee = self.user(&u.user)?;
                self.done(Command::InviteToTeam { owner: me, invitee })
            }
            Action::AcceptInvite(o) => {
                let owner = self.user(&o.owner)?;
                self.done(Command::AcceptTeamInvite { invitee: me, owner })
            }
            Action::DeclineInvite(o) => {
                let owner = self.user(&o.owner)?;
                self.done(Command::DeclineTeamInvite { invitee: me, owner })
            }
            Action::RemoveMember(u) => {
                let member = self.user(&u.user)?;
                self.done(Command::RemoveTeamMember { owner: me, member })
            }
            Action::LeaveTeam(o) => {
                let owner = self.user(&o.owner)?;
                self.done(Command::LeaveTeam { member: me, owner })
            }
            Action::Post(p) => {
                let suggested = p
                    .suggest
                    .iter()
                    .map(|c| self.channel(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let blocked = p
                    .block
                    .iter()
                    .map(|c| self.channel(c))
                    .collect::<Result<_, _>>()?;
                let cmd = Command::CreatePost(NewPost {
                    author: me,
                    body: p.body.clone(),
                    attachment: None,
                    kind: post_kind(p),
                    parent: p.reply_to,
                    quoted: p.quote,
                    suggested,
                    blocked,
                });
                match self.exec(cmd)? {
                    Outcome::Post(id) => Ok(Reply::Post(id)),
                    o => Err(Failure::Transport(format!("unexpected outcome {o:?}"))),
                }
            }
            Action::Burst(b) => {
                let channels = b
                    .channels
                    .iter()
                    .map(|c| self.channel(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let Outcome::Bursts(list) = self.exec(Command::CastBurst {
                    voter: me,
                    post: b.post,
                    channels,
                })?
                else {
                    return Err(Failure::Transport("unexpected outcome".into()));
                };
                let state = self.engine.state();
                Ok(Reply::Bursts(
                    list.iter()
                        .map(|o| {
                            let name = state
                                .channel(o.channel)
                                .map(|c| c.name.clone())
                                .unwrap_or_default();
                            (name, o.result.to_string())
                        })
                        .collect(),
                ))
            }
            Action::Retract(r) => {
                let channel = self.channel(&r.channel)?;
                self.done(Command::RetractFromChannel {
                    author: me,
                    post: r.post,
                    channel,
                })
            }
            Action::Block(b) => {
                let channel = self.channel(&b.channel)?;
                self.done(Command::BlockChannel {
                    author: me,
                    post: b.post,
                    channel,
                })
            }
            Action::React(r) => self.done(Command::AddReaction {
                user: me,
                post: r.post,
                emoji: r.emoji.clone(),
            }),
            Action::Unreact(r) => self.done(Command::RemoveReaction {
                user: me,
                post: r.post,
                emoji: r.emoji.clone(),
            }),
            Action::Delete(d) => self.done(Command::DeletePost {
                author: me,
                post: d.post,
            }),
            Action::Ack(a) => self.done(Command::AckNotification {
                user: me,
                notification: NotificationId(a.notification),
            }),
            Action::ViewPost(p) => Ok(Reply::View(Box::new(self.engine.post_view(me, p.post)?))),
            Action::Feed(f) => {
                let mut query = FeedQuery::new(me).limit(MAX_PAGE_SIZE);
                if let Some(c) = &f.channel {
                    query = query.channel(self.channel(c)?);
                }
                let mut ids = Vec::new();
                loop {
                    let page = self.engine.assemble_feed(&query)?;
                    ids.extend(page.post_ids());
                    match page.next_cursor {
                        Some(c) => query = query.after(c),
                        None => break,
                    }
                }
                Ok(Reply::Feed(ids))
            }
            Action::BurstOptions(p) => Ok(Reply::Options(self.engine.burst_options(me, p.post)?)),
            Action::CountEvents(_) => Err(unsupported(op)),
        }
    }

    fn last_seq(&mut self) -> Result<u64, Failure> {
        Ok(self.engine.state().last_seq().0)
    }

    fn events_after(&mut self, after: u64) -> Option<Result<Vec<Event>, String>> {
        Some(Ok(self
            .events
            .iter()
            .filter(|e| e.seq.0 > after)
            .cloned()
            .collect()))
    }
}
