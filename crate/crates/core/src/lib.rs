//! Routing engine for threshold-based content propagation.
//!
//! Posts start out visible only to the author's team. Anyone who can see a
//! post may vote to *burst* it into channels they belong to; once the
//! distinct votes for a channel reach that channel's threshold, the post
//! becomes visible to all of the channel's members. Thresholds scale with
//! channel size, and `#everyone` is always the hardest channel to reach.
//!
//! The engine is event-sourced. Commands are validated into event batches
//! ([`Engine::prepare`]) and state only changes by folding events
//! ([`State::apply`]), so replaying a log reproduces the live state exactly.

mod engine;
mod error;
mod event;
mod feed;
mod ids;
mod model;
mod state;
mod threshold;
mod view;
mod visibility;

pub use engine::{
    prepare, BurstOutcome, ChannelOutcome, Clock, Command, Engine, NewPost, Outcome, Prepared,
    RejectReason, Settings, DEFAULT_EMOJI, DEFAULT_MAX_TEAM_SIZE,
};
pub use error::{CoreError, ReplayError};
pub use event::{Event, EventKind};
pub use feed::{
    BadCursor, FeedCursor, FeedEntry, FeedPage, FeedQuery, DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE,
};
pub use ids::{ChannelId, EventSeq, NotificationId, PostId, Timestamp, UserId};
pub use model::{
    validate_blob_ref, validate_channel_name, validate_handle, BurstRecord, BurstState, Channel,
    Notification, NotificationKind, Post, PostKind, Subject, User, EVERYONE, MAX_BODY_CHARS,
};
pub use state::State;
pub use threshold::{Fraction, PolicyError, ThresholdPolicy};
pub use view::{
    BurstInto, BurstOption, BurstProgress, ChannelSummary, PostView, ReactionCount, TeamView,
    UserSummary,
};
