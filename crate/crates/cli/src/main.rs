use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use burst_api::dto::{BurstResponse, ChannelCreated, PostCreated, UserCreated};
use burst_api::{credential_for, Config};
use burst_core::{Command, Engine, EventSeq, State};
use burst_store::{DataDir, Store, StoreOptions};
use burstctl::client::{Client, ClientError};
use burstctl::driver::DriveError;
use burstctl::dump::format_event;
use burstctl::replay::{self, ReplayError, Target};
use burstctl::Script;
use clap::{Parser, Subcommand};
use serde_json::json;

/// Administer a burst server and replay scenario scripts.
///
/// Exit status: 0 on success, 1 on other errors, 2 when a replayed script
/// does not get what it expects, 3 when the server cannot be reached, 64
/// on bad usage.
#[derive(Parser)]
#[command(name = "burstctl", version)]
struct Cli {
    /// Server config file (TOML).
    #[arg(long, short, global = true, env = "BURSTD_CONFIG")]
    config: Option<PathBuf>,
    /// Data directory; overrides the config file's.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Server base URL. Defaults to the config's listen address.
    #[arg(long, global = true)]
    server: Option<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create the data directory, the admin user and #everyone.
    Init {
        #[arg(long, default_value = "admin")]
        admin: String,
        #[arg(long, env = "BURST_ADMIN_PASSWORD")]
        password: String,
    },
    /// Create or list users.
    #[command(subcommand)]
    User(UserCmd),
    /// Create, list or inspect channels.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Write a post.
    Post {
        #[arg(long = "as")]
        actor: String,
        #[arg(long, env = "BURST_PASSWORD")]
        password: String,
        #[arg(long)]
        body: String,
        /// Channel to suggest to voters; repeatable.
        #[arg(long)]
        suggest: Vec<String>,
        /// Channel the post must never reach; repeatable.
        #[arg(long)]
        block: Vec<String>,
        #[arg(long, conflicts_with = "quote")]
        reply_to: Option<String>,
        #[arg(long)]
        quote: Option<String>,
    },
    /// Vote to burst a post into channels.
    Burst {
        #[arg(long = "as")]
        actor: String,
        #[arg(long, env = "BURST_PASSWORD")]
        password: String,
        #[arg(long)]
        post: String,
        /// Comma-separated channel names.
        #[arg(long, value_delimiter = ',', required = true)]
        channels: Vec<String>,
    },
    /// Run a scenario script and check its expectations.
    ///
    /// By default a private server is started for the run (in --data-dir if
    /// given, else a temporary directory). --server runs against a live
    /// server instead; --in-process skips HTTP entirely.
    Replay {
        script: PathBuf,
        #[arg(long, conflicts_with = "server")]
        in_process: bool,
        /// Print only the summary.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print the event log. Voters and credentials are not shown.
    DumpLog {
        #[arg(long, default_value_t = 1)]
        from: u64,
    },
}

#[derive(Subcommand)]
enum UserCmd {
    /// Register a user through the server.
    Create {
        handle: String,
        #[arg(long, env = "BURST_PASSWORD")]
        password: String,
        #[arg(long)]
        display_name: Option<String>,
    },
    /// List users, read from the data directory.
    List,
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Create a channel through the server.
    Create {
        name: String,
        #[arg(long = "as")]
        actor: String,
        #[arg(long, env = "BURST_PASSWORD")]
        password: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Fixed threshold; admin only.
        #[arg(long)]
        threshold: Option<u32>,
    },
    /// List channels with member counts and thresholds.
    List,
    /// Print a channel's current burst threshold.
    Threshold { name: String },
}

enum Failure {
    Mismatch(String),
    Transport(String),
    Other(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Transport(_) => Failure::Transport(e.to_string()),
            ClientError::Api { .. } => Failure::Other(e.to_string()),
        }
    }
}

macro_rules! other {
    ($($t:tt)*) => { |e| Failure::Other(format!($($t)*, e)) };
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
        Err(Failure::Transport(m)) => {
            eprintln!("burstctl: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("burstctl: {m}");
            ExitCode::from(1)
        }
    }
}

fn config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(Some(path)).map_err(other!("{}"))?,
        None => Config::default(),
    };
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    Ok(cfg)
}

fn client(cli: &Cli) -> Result<Client, Failure> {
    let url = match &cli.server {
        Some(u) => u.clone(),
        None => format!("http://{}", config(cli)?.listen_addr),
    };
    Ok(Client::new(&url))
}

/// Engine over the state in the data directory, with the config's policy.
fn inspect(cli: &Cli) -> Result<Engine, Failure> {
    let cfg = config(cli)?;
    let dir = DataDir::new(&cfg.data_dir);
    if !dir.log_dir().exists() {
        return Err(Failure::Other(format!(
            "{} has no event log; run `burstctl init` first",
            cfg.data_dir.display()
        )));
    }
    let state: State = dir.load_state().map_err(other!("{}"))?;
    Ok(Engine::from_state(
        state,
        cfg.settings().map_err(other!("{}"))?,
        cfg.engine_clock(),
    ))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Cmd::Init { admin, password } => init(&cli, admin, password),
        Cmd::User(UserCmd::Create {
            handle,
            password,
            display_name,
        }) => {
            let created: UserCreated = client(&cli)?.send(
                "POST",
                "/v1/users",
                None,
                Some(&json!({ "handle": handle, "password": password, "display_name": display_name })),
            )?;
            println!("{} {}", created.user_id, created.handle);
            Ok(())
        }
        Cmd::User(UserCmd::List) => {
            let engine = inspect(&cli)?;
            for u in engine.state().users() {
                let admin = if u.is_admin { "  admin" } else { "" };
                println!(
                    "{:<6} {:<24} {}{admin}",
                    u.id.to_string(),
                    u.handle,
                    u.display_name
                );
            }
            Ok(())
        }
        Cmd::Channel(ChannelCmd::Create {
            name,
            actor,
            password,
            description,
            threshold,
        }) => {
            let c = client(&cli)?;
            let token = c.login(actor, password)?;
            let created: ChannelCreated = c.send(
                "POST",
                "/v1/channels",
                Some(&token),
                Some(&json!({ "name": name, "description": description, "threshold_override": threshold })),
            )?;
            println!("{} {name}", created.channel_id);
            Ok(())
        }
        Cmd::Channel(ChannelCmd::List) => {
            let engine = inspect(&cli)?;
            println!(
                "{:<6} {:<24} {:>8} {:>9}",
                "id", "name", "members", "threshold"
            );
            for c in engine.channel_directory(None) {
                println!(
                    "{:<6} {:<24} {:>8} {:>9}",
                    c.id.to_string(),
                    c.name,
                    c.member_count,
                    c.threshold
                );
            }
            Ok(())
        }
        Cmd::Channel(ChannelCmd::Threshold { name }) => {
            let engine = inspect(&cli)?;
            let channel = engine
                .state()
                .channel_by_name(name)
                .map(|c| c.id)
                .or_else(|| name.parse().ok())
                .ok_or_else(|| Failure::Other(format!("unknown channel {name}")))?;
            let t = engine.compute_threshold(channel).map_err(other!("{}"))?;
            println!("{t}");
            Ok(())
        }
        Cmd::Post {
            actor,
            password,
            body,
            suggest,
            block,
            reply_to,
            quote,
        } => {
            let c = client(&cli)?;
            let token = c.login(actor, password)?;
            let id = |raw: &Option<String>| -> Result<Option<u64>, Failure> {
                raw.as_deref()
                    .map(|r| {
                        r.parse::<burst_core::PostId>()
                            .map(|p| p.0)
                            .map_err(|_| Failure::Other(format!("bad post id {r}")))
                    })
                    .transpose()
            };
            let kind = match (reply_to, quote) {
                (Some(_), _) => "reply",
                (None, Some(_)) => "quote",
                _ => "original",
            };
            let created: PostCreated = c.send(
                "POST",
                "/v1/posts",
                Some(&token),
                Some(&json!({
                    "body": body,
                    "kind": kind,
                    "parent": id(reply_to)?,
                    "quoted": id(quote)?,
                    "suggested": suggest,
                    "blocked": block,
                })),
            )?;
            println!("{}", created.post_id);
            Ok(())
        }
        Cmd::Burst {
            actor,
            password,
            post,
            channels,
        } => {
            let c = client(&cli)?;
            let token = c.login(actor, password)?;
            let post: burst_core::PostId = post
                .parse()
                .map_err(|_| Failure::Other(format!("bad post id {post}")))?;
            let resp: BurstResponse = c.send(
                "POST",
                &format!("/v1/posts/{}/bursts", post.0),
                Some(&token),
                Some(&json!({ "channels": channels })),
            )?;
            for o in resp.outcomes {
                println!("{} {}", o.name, o.outcome);
            }
            Ok(())
        }
        Cmd::Replay {
            script,
            in_process,
            quiet,
        } => replay_script(&cli, script, *in_process, *quiet),
        Cmd::DumpLog { from } => {
            let cfg = config(&cli)?;
            let dir = DataDir::new(&cfg.data_dir);
            let events = dir.replay(EventSeq(*from)).map_err(other!("{}"))?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for ev in events {
                let ev = ev.map_err(other!("{}"))?;
                if writeln!(out, "{}", format_event(&ev)).is_err() {
                    break;
                }
            }
            Ok(())
        }
    }
}

fn init(cli: &Cli, admin: &str, password: &str) -> Result<(), Failure> {
    let cfg = config(cli)?;
    let opts = StoreOptions {
        snapshot_every: cfg.snapshot_every,
        ..StoreOptions::default()
    };
    let (mut store, _) = Store::open(&cfg.data_dir, opts).map_err(other!("{}"))?;
    let state = store.load_state().map_err(other!("{}"))?;
    if state.last_seq().0 > 0 {
        return Err(Failure::Other(format!(
            "{} is already initialized",
            cfg.data_dir.display()
        )));
    }
    let engine = Engine::from_state(
        state,
        cfg.settings().map_err(other!("{}"))?,
        cfg.engine_clock(),
    );
    let prepared = engine
        .prepare(&Command::Bootstrap {
            admin_handle: admin.to_string(),
            display_name: admin.to_string(),
            credential: credential_for(admin, password),
        })
        .map_err(other!("{}"))?;
    store.append(&prepared.events).map_err(other!("{}"))?;
    println!(
        "initialized {}: admin {admin}, channel #everyone",
        cfg.data_dir.display()
    );
    Ok(())
}

fn replay_script(cli: &Cli, path: &PathBuf, in_process: bool, quiet: bool) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    let script =
        Script::parse(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    let target = if in_process {
        Target::InProcess
    } else if let Some(url) = &cli.server {
        Target::Remote { url: url.clone() }
    } else {
        Target::Embedded {
            data_dir: cli.data_dir.clone(),
        }
    };
    let started = std::time::Instant::now();
    let result = replay::run(&script, &target, |step, seen| {
        if !quiet {
            println!(
                "{} {} {} -> {seen}",
                step.describe(),
                step.actor,
                step.action.name()
            );
        }
    });
    match result {
        Ok(done) => {
            println!(
                "ok: {}: {} steps, {} events, {:.2}s",
                script.name,
                done.summary.steps,
                done.summary.last_seq,
                started.elapsed().as_secs_f64()
            );
            Ok(())
        }
        Err(ReplayError::Drive(DriveError::Mismatch(m))) => {
            Err(Failure::Mismatch(format!("{}: {m}", script.name)))
        }
        Err(ReplayError::Drive(e @ DriveError::Transport { .. })) => {
            Err(Failure::Transport(e.to_string()))
        }
        Err(e) => Err(Failure::Other(e.to_string())),
    }
}
