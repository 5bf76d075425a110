//! Test support for the burst workspace: seeded world generators, an
//! independent log oracle, the shared story fixture and a kill-9 harness
//! for the event log.

pub mod checks;
pub mod crash;
pub mod gen;
pub mod oracle;
pub mod scenario;

pub use gen::{Generator, Run, Step, WorldConfig};
pub use oracle::LogOracle;
