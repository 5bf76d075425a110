//! The single writer. Every mutation goes through one thread that owns
//! the store: plan under a read lock, append durably, then fold under a
//! short write lock. Readers never wait on disk I/O.

use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use axum::http::StatusCode;
use burst_core::{Command, Engine, Notification, NotificationId, Outcome};
use burst_store::Store;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::config::OnboardingConfig;
use crate::error::ApiError;

pub struct Job {
    pub command: Command,
    /// Apply the first-post onboarding gate to a `CreatePost`.
    pub gated: bool,
    pub reply: oneshot::Sender<Result<Outcome, ApiError>>,
}

#[derive(Clone)]
pub struct WriterHandle {
    tx: mpsc::Sender<Job>,
}

impl WriterHandle {
    pub async fn submit(&self, command: Command, gated: bool) -> Result<Outcome, ApiError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Job {
                command,
                gated,
                reply,
            })
            .await
            .map_err(|_| ApiError::internal("writer stopped"))?;
        rx.await.map_err(|_| ApiError::internal("writer stopped"))?
    }
}

pub fn spawn(
    store: Store,
    engine: Arc<RwLock<Engine>>,
    onboarding: OnboardingConfig,
    notify: broadcast::Sender<Notification>,
) -> (WriterHandle, JoinHandle<()>) {
    let (tx, rx) = mpsc::channel(1024);
    let thread = std::thread::Builder::new()
        .name("burst-writer".into())
        .spawn(move || run(store, engine, onboarding, notify, rx))
        .expect("spawn writer thread");
    (WriterHandle { tx }, thread)
}

/// Checks the first-post gate for `author`. Later posts are never gated.
pub fn onboarding_gate(
    engine: &Engine,
    cfg: &OnboardingConfig,
    cmd: &Command,
) -> Result<(), ApiError> {
    let Command::CreatePost(new) = cmd else {
        return Ok(());
    };
    if !cfg.enabled {
        return Ok(());
    }
    let state = engine.state();
    let Some(user) = state.user(new.author) else {
        return Ok(());
    };
    if state.posts().any(|p| p.author == user.id) {
        return Ok(());
    }
    let team = user.team_member_ids.len() + user.pending_team_invites.len();
    let channels = user
        .joined_channels
        .iter()
        .filter(|c| Some(**c) != state.everyone())
        .count();
    if team < cfg.min_team || channels < cfg.min_channels {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "OnboardingIncomplete",
            format!(
                "invite at least {} people to your team (have {team}) and join at least {} channels (have {channels}) before your first post",
                cfg.min_team, cfg.min_channels
            ),
        ));
    }
    Ok(())
}

fn run(
    mut store: Store,
    engine: Arc<RwLock<Engine>>,
    onboarding: OnboardingConfig,
    notify: broadcast::Sender<Notification>,
    mut rx: mpsc::Receiver<Job>,
) {
    while let Some(job) = rx.blocking_recv() {
        let result = apply(&mut store, &engine, &onboarding, &notify, &job);
        let _ = job.reply.send(result);
    }
    // Clean shutdown: leave a snapshot so the next start is quick.
    let engine = engine.read().expect("engine lock");
    if engine.state().last_seq().0 > 0 {
        if let Err(e) = store.snapshot(engine.state()) {
            tracing::warn!("final snapshot failed: {e}");
        }
    }
}

fn apply(
    store: &mut Store,
    engine: &RwLock<Engine>,
    onboarding: &OnboardingConfig,
    notify: &broadcast::Sender<Notification>,
    job: &Job,
) -> Result<Outcome, ApiError> {
    let (prepared, notes_before) = {
        let e = engine.read().expect("engine lock");
        if job.gated {
            onboarding_gate(&e, onboarding, &job.command)?;
        }
        let prepared = e.prepare(&job.command).map_err(ApiError::from)?;
        (prepared, e.state().notifications().count() as u64)
    };
    if prepared.events.is_empty() {
        return Ok(prepared.outcome);
    }
    store.append(&prepared.events).map_err(|e| {
        tracing::error!("append failed: {e}");
        ApiError::internal("storage failure")
    })?;
    let mut e = engine.write().expect("engine lock");
    if let Err(err) = e.commit(&prepared.events) {
        // The plan came from this very state, so this cannot happen short
        // of a bug; the log is ahead of memory and a restart will heal it.
        tracing::error!("commit of appended events failed: {err}");
        return Err(ApiError::internal("state diverged from log"));
    }
    let notes_after = e.state().notifications().count() as u64;
    for id in notes_before + 1..=notes_after {
        if let Some(n) = e.state().notification(NotificationId(id)) {
            let _ = notify.send(n.clone());
        }
    }
    drop(e);
    if store.snapshot_due() {
        let e = engine.read().expect("engine lock");
        if let Err(err) = store.snapshot(e.state()) {
            tracing::warn!("snapshot failed: {err}");
        }
    }
    Ok(prepared.outcome)
}
