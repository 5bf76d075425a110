//! `Idempotency-Key` support: a mutation retried with the same key (from
//! the same bearer token) is applied once and its response replayed.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::extract::{Request, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::middleware::Next;
use axum::response::Response;

use crate::server::AppState;

pub const HEADER: &str = "idempotency-key";
const CAPACITY: usize = 10_000;
const MAX_BODY: usize = 16 << 20;

#[derive(Clone)]
struct Stored {
    status: StatusCode,
    content_type: Option<HeaderValue>,
    body: bytes::Bytes,
}

type Slot = Arc<tokio::sync::Mutex<Option<Stored>>>;
/// (Authorization header, Idempotency-Key)
type Key = (String, String);

#[derive(Default)]
pub struct IdempotencyCache {
    inner: Mutex<(HashMap<Key, Slot>, VecDeque<Key>)>,
}

impl IdempotencyCache {
    fn slot(&self, key: Key) -> Slot {
        let mut guard = self.inner.lock().expect("idempotency lock");
        let (map, order) = &mut *guard;
        if let Some(s) = map.get(&key) {
            return s.clone();
        }
        if order.len() >= CAPACITY {
            if let Some(old) = order.pop_front() {
                map.remove(&old);
            }
        }
        let slot = Slot::default();
        map.insert(key.clone(), slot.clone());
        order.push_back(key);
        slot
    }
}

pub async fn layer(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if req.method() == Method::GET {
        return next.run(req).await;
    }
    let Some(key) = req.headers().get(HEADER).and_then(|v| v.to_str().ok()) else {
        return next.run(req).await;
    };
    let token = req
        .headers()
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_string();
    let slot = state.idempotency.slot((token, key.to_string()));
    // Holding the slot serializes concurrent retries of the same key.
    let mut guard = slot.lock().await;
    if let Some(stored) = guard.as_ref() {
        return replay(stored);
    }
    let resp = next.run(req).await;
    if resp.status().is_server_error() {
        return resp;
    }
    let (parts, body) = resp.into_parts();
    let body = match to_bytes(body, MAX_BODY).await {
        Ok(b) => b,
        Err(_) => return Response::from_parts(parts, Body::empty()),
    };
    let stored = Stored {
        status: parts.status,
        content_type: parts.headers.get(axum::http::header::CONTENT_TYPE).cloned(),
        body,
    };
    *guard = Some(stored.clone());
    let mut resp = Response::from_parts(parts, Body::from(stored.body));
    resp.headers_mut()
        .insert("idempotent-replay", HeaderValue::from_static("false"));
    resp
}

fn replay(stored: &Stored) -> Response {
    let mut resp = Response::new(Body::from(stored.body.clone()));
    *resp.status_mut() = stored.status;
    if let Some(ct) = &stored.content_type {
        resp.headers_mut()
            .insert(axum::http::header::CONTENT_TYPE, ct.clone());
    }
    resp.headers_mut()
        .insert("idempotent-replay", HeaderValue::from_static("true"));
    resp
}
