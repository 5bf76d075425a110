//! Sessions: opaque bearer tokens held in memory.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use burst_core::UserId;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::ApiError;
use crate::server::AppState;

/// The stored credential for `handle` with `password`. Keyed by handle so
/// equal passwords do not produce equal credentials.
pub fn credential_for(handle: &str, password: &str) -> String {
    hex::encode(Sha256::digest(format!("burst:{handle}:{password}")))
}

struct Session {
    user: UserId,
    expires: Instant,
    window_start: Instant,
    requests: u32,
}

pub struct Sessions {
    map: Mutex<HashMap<String, Session>>,
    ttl: Duration,
    ceiling: u32,
}

pub struct Issued {
    pub token: String,
    /// Unix milliseconds.
    pub expires_at: i64,
}

impl Sessions {
    pub fn new(ttl: Duration, ceiling: u32) -> Self {
        Sessions {
            map: Mutex::new(HashMap::new()),
            ttl,
            ceiling,
        }
    }

    pub fn issue(&self, user: UserId) -> Issued {
        let mut raw = [0u8; 16];
        rand::rng().fill_bytes(&mut raw);
        let token = URL_SAFE_NO_PAD.encode(raw);
        let now = Instant::now();
        let mut map = self.map.lock().expect("sessions lock");
        map.retain(|_, s| s.expires > now);
        map.insert(
            token.clone(),
            Session {
                user,
                expires: now + self.ttl,
                window_start: now,
                requests: 0,
            },
        );
        let wall = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            + self.ttl;
        Issued {
            token,
            expires_at: wall.as_millis() as i64,
        }
    }

    /// Resolves a token and counts the request against its ceiling.
    pub fn check(&self, token: &str) -> Result<UserId, ApiError> {
        let now = Instant::now();
        let mut map = self.map.lock().expect("sessions lock");
        let Some(s) = map.get_mut(token) else {
            return Err(ApiError::unauthenticated("unknown session token"));
        };
        if s.expires <= now {
            map.remove(token);
            return Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                "SessionExpired",
                "session expired",
            ));
        }
        if self.ceiling > 0 {
            if now.duration_since(s.window_start) >= Duration::from_secs(60) {
                s.window_start = now;
                s.requests = 0;
            }
            s.requests += 1;
            if s.requests > self.ceiling {
                return Err(ApiError::new(
                    StatusCode::TOO_MANY_REQUESTS,
                    "RateLimited",
                    format!("more than {} requests in a minute", self.ceiling),
                ));
            }
        }
        Ok(s.user)
    }
}

pub fn bearer(parts: &Parts) -> Option<&str> {
    parts
        .headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// The authenticated caller.
#[derive(Debug, Clone, Copy)]
pub struct Auth(pub UserId);

impl FromRequestParts<AppState> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        let token =
            bearer(parts).ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?;
        state.sessions.check(token).map(Auth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_are_distinct_and_url_safe() {
        let s = Sessions::new(Duration::from_secs(60), 0);
        let a = s.issue(UserId(1)).token;
        let b = s.issue(UserId(1)).token;
        assert_ne!(a, b);
        assert_eq!(a.len(), 22);
        assert!(a
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'));
        assert_eq!(s.check(&a).unwrap(), UserId(1));
        assert!(s.check("nope").is_err());
    }

    #[test]
    fn expiry_and_ceiling() {
        let s = Sessions::new(Duration::ZERO, 0);
        let t = s.issue(UserId(1)).token;
        assert_eq!(s.check(&t).unwrap_err().code, "SessionExpired");
        let s = Sessions::new(Duration::from_secs(60), 2);
        let t = s.issue(UserId(1)).token;
        s.check(&t).unwrap();
        s.check(&t).unwrap();
        assert_eq!(s.check(&t).unwrap_err().code, "RateLimited");
    }

    #[test]
    fn credentials_depend_on_handle() {
        assert_ne!(credential_for("a", "pw"), credential_for("b", "pw"));
        assert_eq!(credential_for("a", "pw").len(), 64);
    }
}
