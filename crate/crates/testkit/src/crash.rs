//! Kill-injection harness for the event log.
//!
//! The test binary re-executes itself as a worker that appends command
//! batches and prints an acknowledgment line after each one is durable.
//! The parent kills it with SIGKILL at a random point, reopens the store,
//! and checks that every acknowledged batch is still there byte for byte.
//!
//! A test binary opts in by having a test that calls [`maybe_worker`]
//! first thing; that test is what the parent asks the child to run.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command as Process, Stdio};
use std::time::Duration;

use burst_core::{Clock, Engine, Event, EventSeq};
use burst_store::{DataDir, Store, StoreOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{Generator, WorldConfig};

const DIR_ENV: &str = "BURST_CRASH_WORKER_DIR";
const SEED_ENV: &str = "BURST_CRASH_WORKER_SEED";
const WORLD_SEED: u64 = 77;

fn batch_crc(events: &[Event]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for ev in events {
        h.update(&serde_json::to_vec(ev).expect("serializable"));
    }
    h.finalize()
}

fn store_options() -> StoreOptions {
    StoreOptions {
        segment_bytes: 16 << 10,
        snapshot_every: 40,
    }
}

/// Runs the worker loop and exits if this process was spawned as a worker.
/// Returns immediately otherwise.
pub fn maybe_worker() {
    let Ok(dir) = std::env::var(DIR_ENV) else {
        return;
    };
    let seed: u64 = std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let (mut store, _) = Store::open(&dir, store_options()).expect("open store");
    let state = store.load_state().expect("load state");
    let cfg = WorldConfig::medium();
    let mut engine = Engine::from_state(state, cfg.settings.clone(), Clock::logical());
    let mut gen = Generator::new(WORLD_SEED, cfg);
    let setup = gen.setup();
    gen.reseed(seed);
    let mut pending_setup = if engine.state().last_seq() == EventSeq::ZERO {
        setup
    } else {
        Vec::new()
    }
    .into_iter();
    let mut out = std::io::stdout().lock();
    loop {
        let cmd = pending_setup
            .next()
            .unwrap_or_else(|| gen.next_command(&engine));
        let Ok(prepared) = engine.prepare(&cmd) else {
            continue;
        };
        if prepared.events.is_empty() {
            continue;
        }
        store.append(&prepared.events).expect("append");
        engine.commit(&prepared.events).expect("commit");
        let first = prepared.events[0].seq.0;
        let last = prepared.events.last().expect("non-empty").seq.0;
        writeln!(out, "ack {first} {last} {}", batch_crc(&prepared.events)).expect("stdout");
        out.flush().expect("stdout");
        if store.snapshot_due() {
            store.snapshot(engine.state()).expect("snapshot");
        }
    }
}

#[derive(Debug, Default)]
pub struct CrashReport {
    pub kills: usize,
    pub acked_batches: usize,
    pub acked_events: u64,
    /// Recoveries that had to cut a torn or unfinished tail.
    pub torn_tails: usize,
    pub failures: Vec<String>,
}

/// Spawns and kills `trials` workers against one data directory, checking
/// every acknowledged batch after each kill. `test_name` must be the exact
/// name of a test in the current binary that calls [`maybe_worker`].
pub fn kill_trials(test_name: &str, dir: &Path, trials: usize, seed: u64) -> CrashReport {
    let exe = std::env::current_exe().expect("current exe");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acked: BTreeMap<u64, (u64, u32)> = BTreeMap::new();
    let mut report = CrashReport::default();
    for trial in 0..trials {
        let mut child = Process::new(&exe)
            .args([test_name, "--exact", "--nocapture", "--test-threads=1"])
            .env(DIR_ENV, dir)
            .env(SEED_ENV, rng.random::<u64>().to_string())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn worker");
        let stdout = child.stdout.take().expect("piped");
        let mut lines = BufReader::new(stdout).lines();
        let wanted = rng.random_range(1..=40usize);
        let mut got = 0;
        while got < wanted {
            let Some(Ok(line)) = lines.next() else { break };
            let Some(rest) = line.strip_prefix("ack ") else {
                continue;
            };
            let nums: Vec<u64> = rest.split(' ').filter_map(|n| n.parse().ok()).collect();
            if let [first, last, crc] = nums[..] {
                acked.insert(first, (last, crc as u32));
                report.acked_batches += 1;
                report.acked_events += last - first + 1;
                got += 1;
            }
        }
        // Land the kill at a random point inside the next appends.
        std::thread::sleep(Duration::from_micros(rng.random_range(0..1500)));
        child.kill().expect("kill worker");
        // Acks written between our last read and the kill are durable too.
        for line in lines.map_while(Result::ok) {
            let Some(rest) = line.strip_prefix("ack ") else {
                continue;
            };
            let nums: Vec<u64> = rest.split(' ').filter_map(|n| n.parse().ok()).collect();
            if let [first, last, crc] = nums[..] {
                acked.insert(first, (last, crc as u32));
                report.acked_batches += 1;
                report.acked_events += last - first + 1;
            }
        }
        let _ = child.wait();
        report.kills += 1;
        if let Err(e) = verify(dir, &acked, &mut report) {
            report.failures.push(format!("after kill {trial}: {e}"));
        }
    }
    report
}

fn verify(
    dir: &Path,
    acked: &BTreeMap<u64, (u64, u32)>,
    report: &mut CrashReport,
) -> Result<(), String> {
    let (store, recovery) = Store::open(dir, store_options()).map_err(|e| e.to_string())?;
    if recovery.truncated_bytes > 0 {
        report.torn_tails += 1;
    }
    let events: Vec<Event> = DataDir::new(dir)
        .replay(EventSeq(1))
        .map_err(|e| e.to_string())?
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (&first, &(last, crc)) in acked {
        let lo = first as usize - 1;
        let hi = last as usize;
        if hi > events.len() {
            return Err(format!(
                "acknowledged batch {first}..={last} lost (log ends at {})",
                events.len()
            ));
        }
        if batch_crc(&events[lo..hi]) != crc {
            return Err(format!("acknowledged batch {first}..={last} changed"));
        }
    }
    let full = store.data_dir().replay_all().map_err(|e| e.to_string())?;
    let fast = store.load_state().map_err(|e| e.to_string())?;
    if full.canonical_bytes() != fast.canonical_bytes() {
        return Err("snapshot + tail disagrees with full replay".into());
    }
    Ok(())
}
