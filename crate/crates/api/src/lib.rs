//! HTTP service for the burst engine.
//!
//! Every mutation is funneled to a single writer thread that appends the
//! planned events to the log before folding them into memory; reads run
//! concurrently against the in-memory state. Errors are JSON objects of
//! the form `{"code": ..., "message": ...}` where `code` mirrors the core
//! error name.

mod auth;
pub mod config;
pub mod dto;
mod error;
mod idempotency;
pub mod resolve;
mod server;
mod writer;

pub use auth::credential_for;
pub use config::{Config, ConfigError, CONFIG_ENV};
pub use error::{ApiError, ErrorBody};
pub use server::{spawn, AppState, Server, ServerError, ServerHandle, ROUTES};
pub use writer::onboarding_gate;
