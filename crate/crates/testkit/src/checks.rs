//! State checks shared by the property suites.

use std::collections::BTreeSet;

use burst_core::{Engine, FeedQuery, PostId, UserId};

use crate::oracle::LogOracle;

/// Every (user, post) pair the oracle knows, engine against oracle.
pub fn visibility(engine: &Engine, oracle: &LogOracle) -> Result<(), String> {
    for &u in oracle.users() {
        for p in oracle.post_ids() {
            let got = engine
                .can_view(UserId(u), PostId(p))
                .map_err(|e| e.to_string())?;
            if got != oracle.can_view(u, p) {
                return Err(format!(
                    "can_view(u{u}, p{p}): engine {got}, oracle {}",
                    !got
                ));
            }
        }
    }
    Ok(())
}

/// Walks every page of a viewer's feed and checks it holds exactly the
/// live posts they can see, each once, newest first by (created_at,
/// created_seq), with a team banner exactly on team members' posts.
pub fn feed(engine: &Engine, viewer: UserId, page: usize) -> Result<(), String> {
    let state = engine.state();
    let want: BTreeSet<PostId> = state
        .posts()
        .filter(|p| !p.deleted && state.can_view(viewer, p.id).unwrap_or(false))
        .map(|p| p.id)
        .collect();
    let mut seen = Vec::new();
    let mut last_key = None;
    let mut query = FeedQuery::new(viewer).limit(page);
    loop {
        let out = engine.assemble_feed(&query).map_err(|e| e.to_string())?;
        for e in &out.entries {
            let p = state.post(e.post).ok_or("feed names an unknown post")?;
            let key = (p.created_at, p.created_seq);
            if last_key.is_some_and(|k| key >= k) {
                return Err(format!("feed for {viewer} out of order at {}", e.post));
            }
            last_key = Some(key);
            let author = state.user(p.author).ok_or("post by an unknown user")?;
            if e.team_banner.is_some() != author.team_member_ids.contains(&viewer) {
                return Err(format!("banner mismatch on {} for {viewer}", e.post));
            }
        }
        seen.extend(out.post_ids());
        match out.next_cursor {
            Some(c) => query = FeedQuery::new(viewer).limit(page).after(c),
            None => break,
        }
    }
    let unique: BTreeSet<PostId> = seen.iter().copied().collect();
    if unique.len() != seen.len() {
        return Err(format!("feed for {viewer} repeats a post"));
    }
    if unique != want {
        return Err(format!("feed for {viewer}: got {unique:?}, want {want:?}"));
    }
    Ok(())
}

/// #everyone's threshold is strictly above every other channel's.
pub fn everyone_is_hardest(engine: &Engine) -> Result<(), String> {
    let state = engine.state();
    let Some(everyone) = state.everyone() else {
        return Ok(());
    };
    let top = engine
        .compute_threshold(everyone)
        .map_err(|e| e.to_string())?;
    for &c in state.channels().keys() {
        if c == everyone {
            continue;
        }
        let t = engine.compute_threshold(c).map_err(|e| e.to_string())?;
        if t >= top {
            return Err(format!("{c} threshold {t} not below #everyone {top}"));
        }
    }
    Ok(())
}

/// No post is burst into a channel it blocks.
pub fn blocks_respected(engine: &Engine) -> Result<(), String> {
    for p in engine.state().posts() {
        if let Some(c) = p
            .blocked_channels
            .iter()
            .find(|c| p.burst.burst_into.contains_key(c))
        {
            return Err(format!("{} is in blocked channel {c}", p.id));
        }
    }
    Ok(())
}
