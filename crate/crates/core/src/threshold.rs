//! Burst thresholds derived from channel size.
//!
//! A channel's threshold is `clamp(ceil(ratio * members), min, max)` unless
//! the channel carries an explicit override. `#everyone` uses the larger
//! `everyone_ratio` and is additionally lifted to one more than the highest
//! threshold of any other channel, so it is always the hardest to reach.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::ChannelId;
use crate::model::Channel;

const MICROS: u64 = 1_000_000;

/// A non-negative ratio with six decimal digits of precision.
///
/// Thresholds are computed in integer arithmetic so that e.g. `0.05 * 60`
/// is exactly 3 rather than `3.0000000000000004`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction {
    micros: u64,
}

impl Fraction {
    pub fn from_micros(micros: u64) -> Self {
        Fraction { micros }
    }

    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() || !(0.0..=1e6).contains(&value) {
            return None;
        }
        Some(Fraction {
            micros: (value * MICROS as f64).round() as u64,
        })
    }

    pub fn micros(self) -> u64 {
        self.micros
    }

    pub fn as_f64(self) -> f64 {
        self.micros as f64 / MICROS as f64
    }

    /// `ceil(self * n)`, exact.
    pub fn ceil_mul(self, n: u64) -> u64 {
        (self.micros * n).div_ceil(MICROS)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Fraction::from_f64(v).ok_or_else(|| serde::de::Error::custom(format!("bad fraction {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("ratio must be in (0, 1], got {0}")]
    Ratio(Fraction),
    #[error("thresholds need 1 <= min ({min}) <= max ({max})")]
    Bounds { min: u32, max: u32 },
    #[error("everyone_ratio ({everyone}) must exceed ratio ({ratio})")]
    EveryoneRatio { ratio: Fraction, everyone: Fraction },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct ThresholdPolicy {
    ratio: Fraction,
    min_threshold: u32,
    max_threshold: u32,
    everyone_ratio: Fraction,
}

#[derive(Serialize, Deserialize)]
struct RawPolicy {
    ratio: Fraction,
    min_threshold: u32,
    max_threshold: u32,
    everyone_ratio: Fraction,
}

impl TryFrom<RawPolicy> for ThresholdPolicy {
    type Error = PolicyError;

    fn try_from(raw: RawPolicy) -> Result<Self, Self::Error> {
        ThresholdPolicy::new(
            raw.ratio,
            raw.min_threshold,
            raw.max_threshold,
            raw.everyone_ratio,
        )
    }
}

impl From<ThresholdPolicy> for RawPolicy {
    fn from(p: ThresholdPolicy) -> Self {
        RawPolicy {
            ratio: p.ratio,
            min_threshold: p.min_threshold,
            max_threshold: p.max_threshold,
            everyone_ratio: p.everyone_ratio,
        }
    }
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy {
            ratio: Fraction::from_micros(50_000),
            min_threshold: 1,
            max_threshold: 50,
            everyone_ratio: Fraction::from_micros(150_000),
        }
    }
}

impl ThresholdPolicy {
    pub fn new(
        ratio: Fraction,
        min_threshold: u32,
        max_threshold: u32,
        everyone_ratio: Fraction,
    ) -> Result<Self, PolicyError> {
        if ratio.micros == 0 || ratio.micros > MICROS {
            return Err(PolicyError::Ratio(ratio));
        }
        if min_threshold < 1 || min_threshold > max_threshold {
            return Err(PolicyError::Bounds {
                min: min_threshold,
                max: max_threshold,
            });
        }
        if everyone_ratio <= ratio {
            return Err(PolicyError::EveryoneRatio {
                ratio,
                everyone: everyone_ratio,
            });
        }
        Ok(ThresholdPolicy {
            ratio,
            min_threshold,
            max_threshold,
            everyone_ratio,
        })
    }

    pub fn ratio(&self) -> Fraction {
        self.ratio
    }

    pub fn min_threshold(&self) -> u32 {
        self.min_threshold
    }

    pub fn max_threshold(&self) -> u32 {
        self.max_threshold
    }

    pub fn everyone_ratio(&self) -> Fraction {
        self.everyone_ratio
    }

    /// The size-proportional formula alone, before the `#everyone` lift.
    pub fn formula(&self, members: usize, is_everyone: bool) -> u32 {
        let ratio = if is_everyone {
            self.everyone_ratio
        } else {
            self.ratio
        };
        let raw = ratio.ceil_mul(members as u64);
        raw.clamp(self.min_threshold as u64, self.max_threshold as u64) as u32
    }

    fn own_threshold(&self, channel: &Channel) -> u32 {
        match channel.threshold_override {
            Some(t) => t,
            None => self.formula(channel.member_ids.len(), channel.is_everyone),
        }
    }

    /// Threshold currently in force for `id`, or `None` if the channel is unknown.
    pub fn compute(&self, channels: &BTreeMap<ChannelId, Channel>, id: ChannelId) -> Option<u32> {
        let channel = channels.get(&id)?;
        let own = self.own_threshold(channel);
        if !channel.is_everyone || channel.threshold_override.is_some() {
            return Some(own);
        }
        let hardest_other = channels
            .values()
            .filter(|c| !c.is_everyone)
            .map(|c| self.own_threshold(c))
            .max()
            .unwrap_or(0);
        Some(own.max(hardest_other + 1))
    }

    /// Thresholds for every channel at once.
    pub fn table(&self, channels: &BTreeMap<ChannelId, Channel>) -> BTreeMap<ChannelId, u32> {
        let hardest_other = channels
            .values()
            .filter(|c| !c.is_everyone)
            .map(|c| self.own_threshold(c))
            .max()
            .unwrap_or(0);
        channels
            .values()
            .map(|c| {
                let own = self.own_threshold(c);
                let t = if c.is_everyone && c.threshold_override.is_none() {
                    own.max(hardest_other + 1)
                } else {
                    own
                };
                (c.id, t)
            })
            .collect()
    }
}
