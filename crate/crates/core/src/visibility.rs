use crate::error::CoreError;
use crate::ids::{PostId, UserId};
use crate::model::Post;
use crate::state::State;

impl State {
    /// Whether `viewer` may see `post`: the author always can (even after
    /// deletion); otherwise the post must be live and the viewer must be on
    /// the author's team or share a channel the post has burst into.
    pub fn can_view(&self, viewer: UserId, post: PostId) -> Result<bool, CoreError> {
        let viewer_rec = self.user(viewer).ok_or(CoreError::UnknownUser(viewer))?;
        let post = self.post(post).ok_or(CoreError::UnknownPost(post))?;
        Ok(self.visible(viewer_rec.id, post))
    }

    pub(crate) fn visible(&self, viewer: UserId, post: &Post) -> bool {
        if post.author == viewer {
            return true;
        }
        if post.deleted {
            return false;
        }
        let on_team = self
            .user(post.author)
            .is_some_and(|a| a.team_member_ids.contains(&viewer));
        if on_team {
            return true;
        }
        let Some(viewer) = self.user(viewer) else {
            return false;
        };
        post.burst
            .burst_into
            .keys()
            .any(|c| viewer.joined_channels.contains(c))
    }

    pub(crate) fn require_visible(&self, viewer: UserId, post: PostId) -> Result<&Post, CoreError> {
        self.user(viewer).ok_or(CoreError::UnknownUser(viewer))?;
        let p = self.post(post).ok_or(CoreError::UnknownPost(post))?;
        if self.visible(viewer, p) {
            Ok(p)
        } else {
            Err(CoreError::NotVisible(post))
        }
    }
}
