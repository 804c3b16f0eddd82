use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use resto_core::{Goal, Recommendation, Scenario, Session};
use resto_service::shorthand::parse_observation;
use resto_service::{format_sequence, router, AppState, SessionRecord, Store};

#[derive(Parser)]
#[command(name = "resto", version, about = "Post-earthquake restoration planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and solve a scenario, print value and nominal sequence.
    Solve {
        scenario: PathBuf,
        /// Keep every valid action instead of only the maximal ones.
        #[arg(long)]
        no_simplify: bool,
        /// Minimize expected steps until this bus is energized.
        #[arg(long, value_name = "BUS")]
        target: Option<String>,
        /// Write a plain-text dump of the MDP.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
        /// Write a session file for use with `step`.
        #[arg(long, value_name = "PATH")]
        session: Option<PathBuf>,
    },
    /// Apply an observation to a session file and print the next action.
    Step {
        session: PathBuf,
        /// `1:D,4:E` or `{"action":[1,4],"outcomes":{"1":"D","4":"E"}}`.
        observation: String,
    },
    /// Print MDP size statistics for a scenario.
    Stats {
        scenario: PathBuf,
        #[arg(long)]
        no_simplify: bool,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Directory for session files; sessions are in memory only if unset.
        #[arg(long, env = "RESTO_STATE_DIR", value_name = "DIR")]
        state_dir: Option<PathBuf>,
    },
}

fn load(path: &Path, no_simplify: bool, target: Option<String>) -> anyhow::Result<Scenario> {
    let mut scenario =
        Scenario::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    if no_simplify {
        scenario.options.simplify = false;
    }
    if let Some(bus) = target {
        scenario.goal = Goal::TargetBus(bus);
    }
    for w in scenario.network.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(scenario)
}

fn print_stats(session: &Session) {
    let st = session.stats();
    println!(
        "actions={} transitions={} terminals={} max_depth={}",
        st.actions, st.transitions, st.terminals, st.max_depth
    );
}

fn print_next(session: &Session) {
    match session.recommend() {
        Recommendation::Act(a) => println!("next={a}"),
        Recommendation::Terminal => println!("next=none"),
    }
}

fn solve(
    path: &Path,
    no_simplify: bool,
    target: Option<String>,
    dump: Option<PathBuf>,
    session_file: Option<PathBuf>,
) -> anyhow::Result<()> {
    let session = load(path, no_simplify, target)?.start_session()?;
    println!(
        "states={} value={:.4}",
        session.mdp().len(),
        session.initial_value()
    );
    print_stats(&session);
    println!("sequence={}", format_sequence(&session.expected_sequence()));
    if let Some(dump) = dump {
        let out = File::create(&dump).with_context(|| format!("creating {}", dump.display()))?;
        session.mdp().write_dump(BufWriter::new(out))?;
    }
    if let Some(file) = session_file {
        SessionRecord::new(&session)
            .write(&file)
            .with_context(|| format!("writing {}", file.display()))?;
    }
    Ok(())
}

fn step(file: &Path, text: &str) -> anyhow::Result<()> {
    let record =
        SessionRecord::read(file).with_context(|| format!("reading {}", file.display()))?;
    let mut session = Session::from_snapshot(record.snapshot.clone())?;
    let obs = parse_observation(text).map_err(anyhow::Error::msg)?;
    session.apply_observation(obs)?;
    record
        .updated_from(&session)
        .write(file)
        .with_context(|| format!("writing {}", file.display()))?;
    println!("state={}", session.current_state());
    println!("value={:.4}", session.current_value());
    print_next(&session);
    Ok(())
}

fn stats(path: &Path, no_simplify: bool) -> anyhow::Result<()> {
    let session = load(path, no_simplify, None)?.start_session()?;
    let st = session.stats();
    println!("states={}", st.states);
    println!("actions={}", st.actions);
    println!("transitions={}", st.transitions);
    println!("terminals={}", st.terminals);
    println!("max_depth={}", st.max_depth);
    println!("simplified={}", session.mdp().is_simplified());
    Ok(())
}

async fn serve(
    bind: std::net::IpAddr,
    port: u16,
    state_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    let state = match state_dir {
        Some(dir) => {
            let store = Store::open(&dir).with_context(|| format!("opening {}", dir.display()))?;
            let (state, bad) = AppState::with_store(store)?;
            tracing::info!(
                restored = state.session_count(),
                quarantined = bad.len(),
                dir = %dir.display(),
                "session store loaded"
            );
            state
        }
        None => AppState::ephemeral(),
    };
    let addr = SocketAddr::new(bind, port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve {
            scenario,
            no_simplify,
            target,
            dump,
            session,
        } => solve(&scenario, no_simplify, target, dump, session),
        Command::Step {
            session,
            observation,
        } => step(&session, &observation),
        Command::Stats {
            scenario,
            no_simplify,
        } => stats(&scenario, no_simplify),
        Command::Serve {
            port,
            bind,
            state_dir,
        } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(bind, port, state_dir))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
