//! Turning the names clients send into engine ids.

use axum::http::StatusCode;
use burst_core::{ChannelId, Engine, UserId};

use crate::error::ApiError;

pub fn parse_id<T: std::str::FromStr>(raw: &str, what: &str) -> Result<T, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::not_found(format!("no such {what}: {raw}")))
}

/// `#name` or an id such as `c3` or `3`.
pub fn channel_ref(engine: &Engine, raw: &str) -> Result<ChannelId, ApiError> {
    if raw.starts_with('#') {
        return engine
            .state()
            .channel_by_name(raw)
            .map(|c| c.id)
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "UnknownChannel",
                    format!("unknown channel {raw}"),
                )
            });
    }
    let id: ChannelId = parse_id(raw, "channel")?;
    Ok(id)
}

/// A handle, or an id such as `u3` or `3`.
pub fn user_ref(engine: &Engine, raw: &str) -> Result<UserId, ApiError> {
    if let Some(u) = engine.state().user_by_handle(raw) {
        return Ok(u.id);
    }
    let id: UserId = raw.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownUser",
            format!("unknown user {raw}"),
        )
    })?;
    Ok(id)
}
