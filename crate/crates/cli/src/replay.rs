//! Running a whole script: against a private server started for the run,
//! an already running server, or an engine in this process.

use std::path::{Path, PathBuf};

use burst_api::config::ClockConfig;
use burst_api::{Config, ConfigError, ServerError};
use burst_core::{Event, EventSeq};
use burst_store::{DataDir, StoreError};

use crate::backend::{DirectBackend, HttpBackend};
use crate::client::Client;
use crate::driver::{DriveError, Driver, Summary};
use crate::script::{Script, ScriptError, Step};

#[derive(Debug, Clone)]
pub enum Target {
    /// Start a server on a free local port for this run. Its data goes to
    /// the given directory, which must hold no log yet, or to a temporary
    /// one.
    Embedded { data_dir: Option<PathBuf> },
    /// A server that is already running. Its log is not readable, so
    /// `count_events` steps fail.
    Remote { url: String },
    /// No server; the engine runs in this process.
    InProcess,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot start the server: {0}")]
    Server(#[from] ServerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{} already holds an event log", .0.display())]
    NotEmpty(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Replayed {
    pub summary: Summary,
    /// The full event log, when the target exposes it.
    pub events: Option<Vec<Event>>,
}

/// Server configuration a script runs under: its overrides on top of the
/// defaults, a logical clock so logs are reproducible, no request ceiling,
/// and a free local port.
pub fn script_config(script: &Script, data_dir: &Path) -> Config {
    let mut cfg = Config {
        listen_addr: "127.0.0.1:0".into(),
        data_dir: data_dir.to_path_buf(),
        clock: ClockConfig::Logical,
        ..Config::default()
    };
    cfg.session.max_requests_per_minute = 0;
    script.config.apply(&mut cfg);
    cfg
}

pub fn run(
    script: &Script,
    target: &Target,
    report: impl FnMut(&Step, &str),
) -> Result<Replayed, ReplayError> {
    let steps = script.steps()?;
    match target {
        Target::InProcess => {
            let cfg = script_config(script, Path::new("."));
            let mut driver = Driver::new(DirectBackend::new(&cfg)?, &script.config);
            let summary = driver.run(&steps, report)?;
            Ok(Replayed {
                summary,
                events: Some(driver.backend().events().to_vec()),
            })
        }
        Target::Remote { url } => {
            let mut driver = Driver::new(HttpBackend::new(Client::new(url), None), &script.config);
            let summary = driver.run(&steps, report)?;
            Ok(Replayed {
                summary,
                events: None,
            })
        }
        Target::Embedded { data_dir } => {
            let temp;
            let dir = match data_dir {
                Some(d) => {
                    let log = DataDir::new(d).log_dir();
                    if log.exists() && std::fs::read_dir(&log)?.next().is_some() {
                        return Err(ReplayError::NotEmpty(d.clone()));
                    }
                    d.clone()
                }
                None => {
                    temp = tempfile::tempdir()?;
                    temp.path().to_path_buf()
                }
            };
            let server = burst_api::spawn(script_config(script, &dir))?;
            let backend = HttpBackend::new(Client::new(&server.url()), Some(dir.clone()));
            let mut driver = Driver::new(backend, &script.config);
            let result = driver.run(&steps, report);
            server.shutdown()?;
            let summary = result?;
            let events = DataDir::new(&dir)
                .replay(EventSeq(1))?
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Replayed {
                summary,
                events: Some(events),
            })
        }
    }
}
