use std::fs;

use burst_core::{Event, EventSeq, State};
use burst_store::{DataDir, Store, StoreOptions};
use burst_testkit::{Generator, WorldConfig};

fn run(seed: u64) -> Vec<Vec<Event>> {
    let mut out = Vec::new();
    Generator::new(seed, WorldConfig::medium()).run(|step| {
        if let Ok((_, events)) = step.result {
            if !events.is_empty() {
                out.push(events.clone());
            }
        }
    });
    out
}

/// Snapshot at a random batch boundary k, then replay k+1..n: the result
/// must equal folding the whole log, for many generated scripts.
#[test]
fn snapshot_plus_tail_equals_full_replay() {
    for seed in 0..25u64 {
        let batches = run(seed);
        let tmp = tempfile::tempdir().unwrap();
        let (mut store, _) = Store::open(tmp.path(), StoreOptions::default()).unwrap();
        let k = (seed as usize * 7919) % batches.len();
        let mut state = State::new();
        for (i, b) in batches.iter().enumerate() {
            store.append(b).unwrap();
            for ev in b {
                state.apply(ev).unwrap();
            }
            if i == k {
                store.snapshot(&state).unwrap();
            }
        }
        let full = store.data_dir().replay_all().unwrap();
        assert_eq!(full, state, "seed {seed}");
        assert_eq!(
            store.load_state().unwrap().canonical_bytes(),
            full.canonical_bytes(),
            "seed {seed}"
        );
    }
}

#[test]
fn snapshots_are_disposable() {
    let batches = run(99);
    let tmp = tempfile::tempdir().unwrap();
    let (mut store, _) = Store::open(
        tmp.path(),
        StoreOptions {
            snapshot_every: 50,
            ..Default::default()
        },
    )
    .unwrap();
    let mut state = State::new();
    let mut taken = 0;
    for b in &batches {
        store.append(b).unwrap();
        for ev in b {
            state.apply(ev).unwrap();
        }
        if store.snapshot_due() {
            store.snapshot(&state).unwrap();
            taken += 1;
        }
    }
    assert!(taken > 3);
    let snaps = tmp.path().join("snapshots");
    let files: Vec<_> = fs::read_dir(&snaps)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(files.len(), 2, "old snapshots are pruned");

    // A damaged newest snapshot is skipped in favour of an older one.
    let mut newest = files.clone();
    newest.sort();
    let newest = newest
        .iter()
        .max_by_key(|p| {
            p.file_stem()
                .unwrap()
                .to_str()
                .unwrap()
                .parse::<u64>()
                .unwrap()
        })
        .unwrap();
    let mut bytes = fs::read(newest).unwrap();
    let n = bytes.len();
    bytes[n - 3] ^= 0xff;
    fs::write(newest, bytes).unwrap();
    assert_eq!(store.load_state().unwrap(), state);

    // Deleting every snapshot loses nothing.
    fs::remove_dir_all(&snaps).unwrap();
    assert_eq!(DataDir::new(tmp.path()).load_state().unwrap(), state);
    assert_eq!(
        state.last_seq(),
        EventSeq(batches.iter().map(|b| b.len() as u64).sum())
    );
}
