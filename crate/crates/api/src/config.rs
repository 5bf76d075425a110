//! Server configuration, read from a TOML file.
//!
//! ```toml
//! listen_addr = "127.0.0.1:7878"
//! data_dir = "/var/lib/burst"
//! threshold.ratio = 0.05
//! threshold.min = 1
//! threshold.max = 50
//! threshold.everyone_ratio = 0.15
//! team.max_size = 50
//! onboarding.enabled = true
//! onboarding.min_team = 3
//! onboarding.min_channels = 3
//! emoji_allowlist = ["👍", "❤️", "🎉"]
//! ```
//!
//! `BURSTD_CONFIG` names the file when no path is given explicitly.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use burst_core::{Clock, Fraction, PolicyError, Settings, ThresholdPolicy, DEFAULT_EMOJI};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "BURSTD_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid threshold settings: {0}")]
    Threshold(#[from] PolicyError),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("no config file given and {CONFIG_ENV} is not set")]
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub ratio: f64,
    pub min: u32,
    pub max: u32,
    pub everyone_ratio: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let p = ThresholdPolicy::default();
        ThresholdConfig {
            ratio: p.ratio().as_f64(),
            min: p.min_threshold(),
            max: p.max_threshold(),
            everyone_ratio: p.everyone_ratio().as_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeamConfig {
    pub max_size: usize,
}

impl Default for TeamConfig {
    fn default() -> Self {
        TeamConfig {
            max_size: burst_core::DEFAULT_MAX_TEAM_SIZE,
        }
    }
}

/// The first-post gate: a new user must have built a team and joined some
/// channels before posting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnboardingConfig {
    pub enabled: bool,
    /// Accepted plus pending team invites.
    pub min_team: usize,
    /// Joined channels, not counting `#everyone`.
    pub min_channels: usize,
}

impl Default for OnboardingConfig {
    fn default() -> Self {
        OnboardingConfig {
            enabled: true,
            min_team: 3,
            min_channels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionConfig {
    pub ttl_secs: u64,
    /// Requests allowed per token per minute; 0 disables the ceiling.
    pub max_requests_per_minute: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            ttl_secs: 7 * 24 * 3600,
            max_requests_per_minute: 1200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockConfig {
    #[default]
    System,
    /// Timestamps derived from event seqs; for reproducible runs.
    Logical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub listen_addr: String,
    pub data_dir: PathBuf,
    pub threshold: ThresholdConfig,
    pub team: TeamConfig,
    pub onboarding: OnboardingConfig,
    pub session: SessionConfig,
    pub emoji_allowlist: Vec<String>,
    pub clock: ClockConfig,
    /// Directory served under `/app/`, if any.
    pub static_dir: Option<PathBuf>,
    pub snapshot_every: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen_addr: "127.0.0.1:7878".into(),
            data_dir: PathBuf::from("burst-data"),
            threshold: ThresholdConfig::default(),
            team: TeamConfig::default(),
            onboarding: OnboardingConfig::default(),
            session: SessionConfig::default(),
            emoji_allowlist: DEFAULT_EMOJI.iter().map(|e| e.to_string()).collect(),
            clock: ClockConfig::System,
            static_dir: None,
            snapshot_every: burst_store::DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.settings()?;
        Ok(cfg)
    }

    /// Loads `path`, or the file named by `BURSTD_CONFIG` when `path` is
    /// `None`. Relative `data_dir`/`static_dir` resolve against the file.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(CONFIG_ENV)
                .map(PathBuf::from)
                .ok_or(ConfigError::Missing)?,
        };
        let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
            path: path.clone(),
            source,
        })?;
        let mut cfg = Config::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        if let Some(s) = cfg.static_dir.as_mut().filter(|s| s.is_relative()) {
            *s = base.join(&*s);
        }
        Ok(cfg)
    }

    /// Engine settings implied by this config.
    pub fn settings(&self) -> Result<Settings, ConfigError> {
        let frac = |v: f64, what: &str| {
            Fraction::from_f64(v).ok_or_else(|| ConfigError::Invalid(format!("{what} = {v}")))
        };
        let threshold = ThresholdPolicy::new(
            frac(self.threshold.ratio, "threshold.ratio")?,
            self.threshold.min,
            self.threshold.max,
            frac(self.threshold.everyone_ratio, "threshold.everyone_ratio")?,
        )?;
        if self.team.max_size == 0 {
            return Err(ConfigError::Invalid(
                "team.max_size must be positive".into(),
            ));
        }
        if self.emoji_allowlist.is_empty() {
            return Err(ConfigError::Invalid("emoji_allowlist is empty".into()));
        }
        Ok(Settings {
            threshold,
            max_team_size: self.team.max_size,
            emoji_allowlist: self
                .emoji_allowlist
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>(),
        })
    }

    pub fn engine_clock(&self) -> Clock {
        match self.clock {
            ClockConfig::System => Clock::System,
            ClockConfig::Logical => Clock::logical(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys() {
        let cfg = Config::parse(
            r#"
            listen_addr = "0.0.0.0:9000"
            data_dir = "/tmp/b"
            threshold.ratio = 0.1
            threshold.min = 2
            threshold.max = 40
            threshold.everyone_ratio = 0.2
            team.max_size = 12
            onboarding.enabled = false
            onboarding.min_team = 1
            onboarding.min_channels = 2
            emoji_allowlist = ["👍"]
            clock = "logical"
            "#,
        )
        .unwrap();
        let s = cfg.settings().unwrap();
        assert_eq!(s.threshold.ratio().micros(), 100_000);
        assert_eq!(s.threshold.min_threshold(), 2);
        assert_eq!(s.max_team_size, 12);
        assert!(!cfg.onboarding.enabled);
        assert_eq!(cfg.clock, ClockConfig::Logical);
        assert_eq!(s.emoji_allowlist.len(), 1);
    }

    #[test]
    fn defaults_and_rejections() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.settings().unwrap(), Settings::default());
        assert!(Config::parse("threshold.min = 0").is_err());
        assert!(Config::parse("threshold.everyone_ratio = 0.01").is_err());
        assert!(Config::parse("bogus = 1").is_err());
    }
}
