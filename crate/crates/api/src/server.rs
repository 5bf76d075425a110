use std::convert::Infallible;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{middleware, Json, Router};
use burst_core::{
    BurstOutcome, Command, CoreError, Engine, FeedCursor, FeedQuery, NewPost, Notification,
    NotificationId, Outcome, PostId,
};
use burst_store::{BlobStore, Store, StoreError, StoreOptions, MAX_BLOB_BYTES};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::sync::{broadcast, watch};

use crate::auth::{credential_for, Auth, Sessions};
use crate::config::{Config, ConfigError};
use crate::dto::*;
use crate::error::ApiError;
use crate::idempotency::{self, IdempotencyCache};
use crate::resolve::{channel_ref, parse_id, user_ref};
use crate::writer::{self, WriterHandle};

/// Every route the server answers, as `(method, path)`.
pub const ROUTES: &[(&str, &str)] = &[
    ("GET", "/v1/health"),
    ("POST", "/v1/bootstrap"),
    ("POST", "/v1/users"),
    ("GET", "/v1/users"),
    ("GET", "/v1/users/{id}"),
    ("POST", "/v1/sessions"),
    ("POST", "/v1/posts"),
    ("GET", "/v1/posts/{id}"),
    ("DELETE", "/v1/posts/{id}"),
    ("GET", "/v1/feed"),
    ("GET", "/v1/posts/{id}/burst-options"),
    ("POST", "/v1/posts/{id}/bursts"),
    ("DELETE", "/v1/posts/{id}/channels/{chan}"),
    ("POST", "/v1/posts/{id}/blocked-channels"),
    ("PUT", "/v1/posts/{id}/reactions/{emoji}"),
    ("DELETE", "/v1/posts/{id}/reactions/{emoji}"),
    ("POST", "/v1/channels"),
    ("GET", "/v1/channels"),
    ("GET", "/v1/channels/{id}"),
    ("PUT", "/v1/channels/{id}/members/me"),
    ("DELETE", "/v1/channels/{id}/members/me"),
    ("GET", "/v1/team"),
    ("POST", "/v1/team/invites"),
    ("POST", "/v1/team/invites/{owner}/accept"),
    ("POST", "/v1/team/invites/{owner}/decline"),
    ("DELETE", "/v1/team/members/{id}"),
    ("DELETE", "/v1/team/memberships/{owner}"),
    ("GET", "/v1/notifications"),
    ("GET", "/v1/notifications/stream"),
    ("POST", "/v1/notifications/{id}/ack"),
    ("POST", "/v1/blobs"),
    ("GET", "/v1/blobs/{hash}"),
];

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) engine: Arc<RwLock<Engine>>,
    pub(crate) writer: WriterHandle,
    pub(crate) sessions: Arc<Sessions>,
    pub(crate) idempotency: Arc<IdempotencyCache>,
    pub(crate) notify: broadcast::Sender<Notification>,
    pub(crate) blobs: BlobStore,
    pub(crate) config: Arc<Config>,
    pub(crate) closing: watch::Receiver<bool>,
}

impl AppState {
    fn read<T>(&self, f: impl FnOnce(&Engine) -> T) -> T {
        f(&self.engine.read().expect("engine lock"))
    }

    async fn exec(&self, cmd: Command) -> Result<Outcome, ApiError> {
        self.writer.submit(cmd, false).await
    }
}

/// JSON body extractor whose failures use the API error shape.
struct JsonBody<T>(T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(JsonBody(v)),
            Err(e @ JsonRejection::MissingJsonContentType(_)) => Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "BadRequest",
                e.body_text(),
            )),
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}

fn created<T: serde::Serialize>(body: T) -> Response {
    (StatusCode::CREATED, Json(body)).into_response()
}

fn no_content() -> Response {
    StatusCode::NO_CONTENT.into_response()
}

async fn health(State(s): State<AppState>) -> Json<Health> {
    Json(s.read(|e| Health {
        status: "ok".into(),
        last_seq: e.state().last_seq().0,
        last_at: e.state().last_at(),
    }))
}

async fn bootstrap(
    State(s): State<AppState>,
    JsonBody(req): JsonBody<CreateUser>,
) -> Result<Response, ApiError> {
    let cmd = Command::Bootstrap {
        display_name: req.display_name.unwrap_or_else(|| req.handle.clone()),
        credential: credential_for(&req.handle, &req.password),
        admin_handle: req.handle.clone(),
    };
    match s.exec(cmd).await? {
        Outcome::User(user_id) => Ok(created(UserCreated {
            user_id,
            handle: req.handle,
        })),
        o => Err(ApiError::internal(format!("unexpected outcome {o:?}"))),
    }
}

async fn create_user(
    State(s): State<AppState>,
    JsonBody(req): JsonBody<CreateUser>,
) -> Result<Response, ApiError> {
    let cmd = Command::CreateUser {
        display_name: req.display_name.unwrap_or_else(|| req.handle.clone()),
        credential: credential_for(&req.handle, &req.password),
        handle: req.handle.clone(),
    };
    match s.exec(cmd).await? {
        Outcome::User(user_id) => Ok(created(UserCreated {
            user_id,
            handle: req.handle,
        })),
        o => Err(ApiError::internal(format!("unexpected outcome {o:?}"))),
    }
}

async fn list_users(State(s): State<AppState>, _: Auth) -> Json<Vec<burst_core::UserSummary>> {
    Json(s.read(|e| e.state().users().map(Into::into).collect()))
}

async fn get_user(
    State(s): State<AppState>,
    _: Auth,
    Path(id): Path<String>,
) -> Result<Json<burst_core::UserSummary>, ApiError> {
    s.read(|e| {
        let id = user_ref(e, &id)?;
        let u = e.state().user(id).ok_or(CoreError::UnknownUser(id))?;
        Ok(Json(u.into()))
    })
}

async fn login(
    State(s): State<AppState>,
    JsonBody(req): JsonBody<Login>,
) -> Result<Response, ApiError> {
    let user = s.read(|e| {
        e.state()
            .user_by_handle(&req.handle)
            .filter(|u| u.credential == credential_for(&req.handle, &req.password))
            .map(|u| u.id)
    });
    let Some(user_id) = user else {
        return Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "BadCredentials",
            "wrong handle or password",
        ));
    };
    let issued = s.sessions.issue(user_id);
    Ok(created(SessionCreated {
        token: issued.token,
        user_id,
        handle: req.handle,
        expires_at: issued.expires_at,
    }))
}

async fn create_post(
    State(s): State<AppState>,
    Auth(me): Auth,
    JsonBody(req): JsonBody<CreatePost>,
) -> Result<Response, ApiError> {
    let (suggested, blocked) = s.read(|e| {
        let suggested = req
            .suggested
            .iter()
            .map(|c| channel_ref(e, &c.0))
            .collect::<Result<Vec<_>, _>>()?;
        let blocked = req
            .blocked
            .iter()
            .map(|c| channel_ref(e, &c.0))
            .collect::<Result<_, _>>()?;
        Ok::<_, ApiError>((suggested, blocked))
    })?;
    if let Some(hash) = &req.attachment {
        if !s.blobs.contains(hash) {
            return Err(CoreError::BadAttachment(hash.clone()).into());
        }
    }
    let cmd = Command::CreatePost(NewPost {
        author: me,
        body: req.body,
        attachment: req.attachment,
        kind: req.kind,
        parent: req.parent,
        quoted: req.quoted,
        suggested,
        blocked,
    });
    match s.writer.submit(cmd, true).await? {
        Outcome::Post(post_id) => Ok(created(PostCreated { post_id })),
        o => Err(ApiError::internal(format!("unexpected outcome {o:?}"))),
    }
}

async fn get_post(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let id: PostId = parse_id(&id, "post")?;
    let view = s.read(|e| e.post_view(me, id))?;
    Ok(Json(view).into_response())
}

async fn delete_post(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    s.exec(Command::DeletePost { author: me, post }).await?;
    Ok(no_content())
}

#[derive(Debug, Deserialize)]
struct FeedParams {
    channel: Option<String>,
    cursor: Option<String>,
    limit: Option<String>,
}

async fn feed(
    State(s): State<AppState>,
    Auth(me): Auth,
    Query(q): Query<FeedParams>,
) -> Result<Response, ApiError> {
    let page = s.read(|e| {
        let mut query = FeedQuery::new(me);
        if let Some(c) = q.channel.as_deref().filter(|c| !c.is_empty()) {
            query = query.channel(channel_ref(e, c)?);
        }
        if let Some(c) = q.cursor.as_deref().filter(|c| !c.is_empty()) {
            let cursor: FeedCursor = c
                .parse()
                .map_err(|_| ApiError::bad_request(format!("bad cursor {c}")))?;
            query = query.after(cursor);
        }
        if let Some(l) = q.limit.as_deref().filter(|l| !l.is_empty()) {
            let limit: usize = l
                .parse()
                .map_err(|_| ApiError::bad_request(format!("bad limit {l}")))?;
            query = query.limit(limit);
        }
        e.assemble_feed(&query).map_err(ApiError::from)
    })?;
    Ok(Json(page).into_response())
}

async fn burst_options(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    let options = s.read(|e| e.burst_options(me, post))?;
    Ok(Json(options).into_response())
}

async fn cast_burst(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<BurstRequest>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    let channels = s.read(|e| {
        req.channels
            .iter()
            .map(|c| channel_ref(e, &c.0))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let Outcome::Bursts(list) = s
        .exec(Command::CastBurst {
            voter: me,
            post,
            channels,
        })
        .await?
    else {
        return Err(ApiError::internal("unexpected outcome"));
    };
    let outcomes = s.read(|e| {
        list.iter()
            .map(|o| {
                let (votes, threshold) = match o.result {
                    BurstOutcome::Progress { votes, threshold } => (Some(votes), Some(threshold)),
                    _ => (None, None),
                };
                ChannelResult {
                    channel: o.channel,
                    name: e
                        .state()
                        .channel(o.channel)
                        .map(|c| c.name.clone())
                        .unwrap_or_default(),
                    outcome: o.result.to_string(),
                    votes,
                    threshold,
                }
            })
            .collect()
    });
    Ok(Json(BurstResponse { outcomes }).into_response())
}

async fn retract(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path((id, chan)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    let channel = s.read(|e| channel_ref(e, &chan))?;
    s.exec(Command::RetractFromChannel {
        author: me,
        post,
        channel,
    })
    .await?;
    Ok(no_content())
}

async fn block(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<BlockRequest>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    let channel = s.read(|e| channel_ref(e, &req.channel.0))?;
    s.exec(Command::BlockChannel {
        author: me,
        post,
        channel,
    })
    .await?;
    Ok(no_content())
}

async fn add_reaction(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path((id, emoji)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    s.exec(Command::AddReaction {
        user: me,
        post,
        emoji,
    })
    .await?;
    Ok(no_content())
}

async fn remove_reaction(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path((id, emoji)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let post: PostId = parse_id(&id, "post")?;
    s.exec(Command::RemoveReaction {
        user: me,
        post,
        emoji,
    })
    .await?;
    Ok(no_content())
}

async fn create_channel(
    State(s): State<AppState>,
    Auth(me): Auth,
    JsonBody(req): JsonBody<CreateChannel>,
) -> Result<Response, ApiError> {
    let cmd = Command::CreateChannel {
        creator: me,
        name: req.name,
        description: req.description,
        threshold_override: req.threshold_override,
    };
    match s.exec(cmd).await? {
        Outcome::Channel(channel_id) => Ok(created(ChannelCreated { channel_id })),
        o => Err(ApiError::internal(format!("unexpected outcome {o:?}"))),
    }
}

async fn list_channels(State(s): State<AppState>, Auth(me): Auth) -> Response {
    Json(s.read(|e| e.channel_directory(Some(me)))).into_response()
}

async fn get_channel(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let summary = s.read(|e| {
        let c = channel_ref(e, &id)?;
        e.channel_summary(c, Some(me)).map_err(ApiError::from)
    })?;
    Ok(Json(summary).into_response())
}

async fn join_channel(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let channel = s.read(|e| channel_ref(e, &id))?;
    s.exec(Command::JoinChannel { user: me, channel }).await?;
    Ok(no_content())
}

async fn leave_channel(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let channel = s.read(|e| channel_ref(e, &id))?;
    s.exec(Command::LeaveChannel { user: me, channel }).await?;
    Ok(no_content())
}

async fn team(State(s): State<AppState>, Auth(me): Auth) -> Result<Response, ApiError> {
    Ok(Json(s.read(|e| e.team_view(me))?).into_response())
}

async fn invite(
    State(s): State<AppState>,
    Auth(me): Auth,
    JsonBody(req): JsonBody<InviteRequest>,
) -> Result<Response, ApiError> {
    let invitee = s.read(|e| user_ref(e, &req.invitee.0))?;
    s.exec(Command::InviteToTeam { owner: me, invitee }).await?;
    Ok(no_content())
}

async fn accept_invite(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(owner): Path<String>,
) -> Result<Response, ApiError> {
    let owner = s.read(|e| user_ref(e, &owner))?;
    s.exec(Command::AcceptTeamInvite { invitee: me, owner })
        .await?;
    Ok(no_content())
}

async fn decline_invite(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(owner): Path<String>,
) -> Result<Response, ApiError> {
    let owner = s.read(|e| user_ref(e, &owner))?;
    s.exec(Command::DeclineTeamInvite { invitee: me, owner })
        .await?;
    Ok(no_content())
}

async fn remove_member(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let member = s.read(|e| user_ref(e, &id))?;
    s.exec(Command::RemoveTeamMember { owner: me, member })
        .await?;
    Ok(no_content())
}

async fn leave_team(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(owner): Path<String>,
) -> Result<Response, ApiError> {
    let owner = s.read(|e| user_ref(e, &owner))?;
    s.exec(Command::LeaveTeam { member: me, owner }).await?;
    Ok(no_content())
}

#[derive(Debug, Deserialize)]
struct SinceParams {
    since: Option<String>,
}

async fn notifications(
    State(s): State<AppState>,
    Auth(me): Auth,
    Query(q): Query<SinceParams>,
) -> Result<Response, ApiError> {
    let since: u64 = match q.since.as_deref().filter(|v| !v.is_empty()) {
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request(format!("bad since {v}")))?,
        None => 0,
    };
    let list = s.read(|e| {
        e.state()
            .notifications()
            .filter(|n| n.recipient == me && n.seq.0 > since)
            .cloned()
            .collect()
    });
    Ok(Json(Notifications {
        notifications: list,
    })
    .into_response())
}

/// Newline-delimited JSON, one notification per line, until the client
/// goes away or the server shuts down. Missed records are recovered with
/// `GET /v1/notifications?since=`.
async fn notification_stream(State(s): State<AppState>, Auth(me): Auth) -> Response {
    let rx = s.notify.subscribe();
    let closing = s.closing.clone();
    let stream = futures::stream::unfold((rx, closing), move |(mut rx, mut closing)| async move {
        loop {
            tokio::select! {
                msg = rx.recv() => match msg {
                    Ok(n) if n.recipient == me => {
                        let mut line = serde_json::to_vec(&n).expect("serializable");
                        line.push(b'\n');
                        return Some((Ok::<_, Infallible>(Bytes::from(line)), (rx, closing)));
                    }
                    Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => return None,
                },
                _ = closing.changed() => return None,
            }
        }
    });
    Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .header(header::CACHE_CONTROL, "no-cache")
        .body(Body::from_stream(stream))
        .expect("valid response")
}

async fn ack(
    State(s): State<AppState>,
    Auth(me): Auth,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let notification: NotificationId = parse_id(&id, "notification")?;
    s.exec(Command::AckNotification {
        user: me,
        notification,
    })
    .await?;
    Ok(no_content())
}

async fn put_blob(State(s): State<AppState>, _: Auth, body: Bytes) -> Result<Response, ApiError> {
    if body.len() > MAX_BLOB_BYTES {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "BlobTooLarge",
            "attachments are limited to 5 MiB",
        ));
    }
    let blobs = s.blobs.clone();
    let hash = tokio::task::spawn_blocking(move || blobs.put(&body))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(created(BlobStored { hash }))
}

async fn get_blob(
    State(s): State<AppState>,
    _: Auth,
    Path(hash): Path<String>,
) -> Result<Response, ApiError> {
    let blobs = s.blobs.clone();
    let bytes = tokio::task::spawn_blocking(move || blobs.get(&hash))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| match e {
            StoreError::BlobNotFound(h) | StoreError::BadBlobHash(h) => {
                ApiError::not_found(format!("no blob {h}"))
            }
            other => ApiError::internal(other.to_string()),
        })?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/bootstrap", post(bootstrap))
        .route("/v1/users", post(create_user).get(list_users))
        .route("/v1/users/{id}", get(get_user))
        .route("/v1/sessions", post(login))
        .route("/v1/posts", post(create_post))
        .route("/v1/posts/{id}", get(get_post).delete(delete_post))
        .route("/v1/feed", get(feed))
        .route("/v1/posts/{id}/burst-options", get(burst_options))
        .route("/v1/posts/{id}/bursts", post(cast_burst))
        .route("/v1/posts/{id}/channels/{chan}", delete(retract))
        .route("/v1/posts/{id}/blocked-channels", post(block))
        .route(
            "/v1/posts/{id}/reactions/{emoji}",
            put(add_reaction).delete(remove_reaction),
        )
        .route("/v1/channels", post(create_channel).get(list_channels))
        .route("/v1/channels/{id}", get(get_channel))
        .route(
            "/v1/channels/{id}/members/me",
            put(join_channel).delete(leave_channel),
        )
        .route("/v1/team", get(team))
        .route("/v1/team/invites", post(invite))
        .route("/v1/team/invites/{owner}/accept", post(accept_invite))
        .route("/v1/team/invites/{owner}/decline", post(decline_invite))
        .route("/v1/team/members/{id}", delete(remove_member))
        .route("/v1/team/memberships/{owner}", delete(leave_team))
        .route("/v1/notifications", get(notifications))
        .route("/v1/notifications/stream", get(notification_stream))
        .route("/v1/notifications/{id}/ack", post(ack))
        .route(
            "/v1/blobs",
            post(put_blob).layer(DefaultBodyLimit::max(MAX_BLOB_BYTES + 1)),
        )
        .route("/v1/blobs/{hash}", get(get_blob))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(
            state.clone(),
            idempotency::layer,
        ));
    let app = match &state.config.static_dir {
        Some(dir) => api.nest_service(
            "/app",
            tower_http::services::ServeDir::new(dir).append_index_html_on_directories(true),
        ),
        None => api,
    };
    app.with_state(state)
}

/// An opened server: store recovered, state loaded, writer running.
pub struct Server {
    state: AppState,
    writer_thread: std::thread::JoinHandle<()>,
    closing: watch::Sender<bool>,
}

impl Server {
    pub fn open(config: Config) -> Result<Server, ServerError> {
        let settings = config.settings()?;
        let (store, recovery) = Store::open(
            &config.data_dir,
            StoreOptions {
                snapshot_every: config.snapshot_every.max(1),
                ..StoreOptions::default()
            },
        )?;
        if recovery.truncated_bytes > 0 {
            tracing::warn!(
                "recovered log: dropped {} bytes ({} records) of an unfinished batch",
                recovery.truncated_bytes,
                recovery.dropped_records
            );
        }
        let state = store.load_state()?;
        let blobs = store.blobs();
        let engine = Arc::new(RwLock::new(Engine::from_state(
            state,
            settings,
            config.engine_clock(),
        )));
        let (notify, _) = broadcast::channel(4096);
        let (writer, writer_thread) = writer::spawn(
            store,
            engine.clone(),
            config.onboarding.clone(),
            notify.clone(),
        );
        let (closing, closing_rx) = watch::channel(false);
        let sessions = Sessions::new(
            Duration::from_secs(config.session.ttl_secs),
            config.session.max_requests_per_minute,
        );
        Ok(Server {
            state: AppState {
                engine,
                writer,
                sessions: Arc::new(sessions),
                idempotency: Arc::new(IdempotencyCache::default()),
                notify,
                blobs,
                config: Arc::new(config),
                closing: closing_rx,
            },
            writer_thread,
            closing,
        })
    }

    pub fn router(&self) -> Router {
        router(self.state.clone())
    }

    /// Serves until `shutdown` resolves, then drains the writer and leaves
    /// a snapshot behind.
    pub async fn serve(
        self,
        listener: tokio::net::TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> Result<(), ServerError> {
        let Server {
            state,
            writer_thread,
            closing,
        } = self;
        let app = router(state.clone());
        drop(state);
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                shutdown.await;
                let _ = closing.send(true);
            })
            .await?;
        tokio::task::spawn_blocking(move || writer_thread.join())
            .await
            .map_err(|e| std::io::Error::other(e.to_string()))?
            .map_err(|_| std::io::Error::other("writer thread panicked"))?;
        Ok(())
    }
}

/// A server running on its own runtime thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<Result<(), ServerError>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests and waits for a clean shutdown.
    pub fn shutdown(mut self) -> Result<(), ServerError> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<(), ServerError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .map_err(|_| ServerError::Io(std::io::Error::other("server thread panicked")))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// Opens `config.data_dir`, binds `config.listen_addr` and serves on a
/// background thread. Port 0 picks a free port; see [`ServerHandle::addr`].
pub fn spawn(config: Config) -> Result<ServerHandle, ServerError> {
    let listener = std::net::TcpListener::bind(&config.listen_addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let server = Server::open(config)?;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("burst-server".into())
        .spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                server
                    .serve(listener, async move {
                        let _ = stopped.await;
                    })
                    .await
            })
        })?;
    Ok(ServerHandle {
        addr,
        stop: Some(stop),
        thread: Some(thread),
    })
}
