use burst_core::{Command, CoreError, EventKind, FeedQuery, NotificationKind, Settings, State};
use burst_testkit::scenario;

#[test]
fn idea_bursts_outward_in_order() {
    let mut story = scenario::play(Settings::default());
    assert_eq!(story.votes, scenario::expected_outcomes(&story));

    let post = story.engine.state().post(story.post).unwrap();
    assert_eq!(
        post.burst.burst_order(),
        vec![story.burst, story.stanford_hci, story.cscw]
    );
    let notified = story
        .engine
        .state()
        .notifications()
        .filter(|n| n.recipient == story.xiaoling && n.kind == NotificationKind::PostBurst)
        .count();
    assert_eq!(notified, 3);

    // Xiaoling only discovers #cscw after the post lands there.
    let xiaoling = story.xiaoling;
    assert!(matches!(
        story
            .engine
            .assemble_feed(&FeedQuery::new(xiaoling).channel(story.cscw)),
        Err(CoreError::NotAMember { .. })
    ));
    story
        .engine
        .execute(&Command::JoinChannel {
            user: xiaoling,
            channel: story.cscw,
        })
        .unwrap();
    let feed = story
        .engine
        .assemble_feed(&FeedQuery::new(xiaoling).channel(story.cscw))
        .unwrap();
    assert_eq!(feed.post_ids(), vec![story.post]);
    assert!(feed.entries[0].channel_tags.contains(&story.cscw));
}

#[test]
fn exactly_one_burst_event_per_channel() {
    let story = scenario::play(Settings::default());
    let bursts: Vec<_> = story
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::PostBurst {
                channel,
                votes,
                threshold,
                ..
            } => Some((*channel, *votes, *threshold)),
            _ => None,
        })
        .collect();
    assert_eq!(
        bursts,
        vec![
            (story.burst, 2, 2),
            (story.stanford_hci, 10, 10),
            (story.cscw, 50, 50)
        ]
    );
    let post = story.engine.state().post(story.post).unwrap();
    assert_eq!(
        post.burst.vote_count(story.burst),
        2,
        "surplus votes are not recorded"
    );
}

#[test]
fn story_log_replays_to_same_state() {
    let story = scenario::play(Settings::default());
    let folded = State::replay(&story.events).unwrap();
    assert_eq!(
        folded.canonical_bytes(),
        story.engine.state().canonical_bytes()
    );
    let again = scenario::play(Settings::default());
    assert_eq!(story.events, again.events);
}
