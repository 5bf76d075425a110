//! Client tooling for burst: an HTTP client, a scenario-replay driver,
//! and event log formatting.
//!
//! Scripts ([`script`]) run through a [`driver::Driver`] over either
//! backend in [`backend`]: a server reached over HTTP, or an engine in this
//! process. Both apply the same name resolution, password and onboarding
//! rules, so one script yields the same event log either way.

pub mod backend;
pub mod client;
pub mod driver;
pub mod dump;
pub mod replay;
pub mod script;

pub use backend::{Backend, DirectBackend, HttpBackend};
pub use client::Client;
pub use driver::{DriveError, Driver, Summary};
pub use replay::{ReplayError, Replayed, Target};
pub use script::{Script, ScriptConfig};
