use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use serde::de::DeserializeOwned;

use netgame::harness::config::load_config;
use netgame::harness::{boundary, boxplot, run, HarnessError, RunContext};

/// Stability analysis and Q-learning experiments for network polymatrix games.
///
/// Set NETGAME_LOG (error, warn, info, debug, trace) for progress output on stderr.
#[derive(Parser)]
#[command(name = "netgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the interaction coefficient, network norms and stability threshold.
    Analyze(Common),
    /// Simulate Q-learning from one or more initial conditions.
    Simulate(Common),
    /// Solve for the quantal response equilibrium.
    Qre(Common),
    /// Sample final-window strategies over a grid of exploration rates.
    Boxplot(Common),
    /// Locate the empirical stability boundary for a range of network sizes.
    Boundary(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: out; analyze writes only to stdout unless given].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn context<C: DeserializeOwned>(common: &Common) -> Result<(C, RunContext), HarnessError> {
    let (cfg, raw_config) = load_config(&common.config)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    Ok((
        cfg,
        RunContext {
            seed: common.seed,
            out,
            raw_config,
        },
    ))
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Analyze(c) => {
            let (cfg, ctx) = context(&c)?;
            let report = run::analyze(&cfg, &ctx)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            if c.out.is_some() {
                netgame::harness::output::ensure_dir(&ctx.out)?;
                netgame::harness::output::write_json(&ctx.out.join("analyze.json"), &report)?;
            }
        }
        Command::Simulate(c) => {
            let (cfg, ctx) = context(&c)?;
            let summaries = run::simulate(&cfg, &ctx)?;
            let converged = summaries.iter().filter(|s| s.converged).count();
            println!(
                "{converged}/{} trajectories converged; wrote {}",
                summaries.len(),
                ctx.out.display()
            );
        }
        Command::Qre(c) => {
            let (cfg, ctx) = context(&c)?;
            let sol = run::qre(&cfg, &ctx)?;
            println!(
                "residual {:e} after {} iterations; wrote {}",
                sol.residual,
                sol.iterations,
                ctx.out.join("qre.json").display()
            );
        }
        Command::Boxplot(c) => {
            let (cfg, ctx) = context(&c)?;
            let summaries = boxplot::boxplot(&cfg, &ctx)?;
            for s in &summaries {
                println!("T={} agent {}: spread {:e}", s.t, s.agent, s.spread);
            }
        }
        Command::Boundary(c) => {
            let (cfg, ctx) = context(&c)?;
            let rows = boundary::boundary(&cfg, &ctx)?;
            for r in &rows {
                let b = r
                    .empirical_boundary
                    .map_or("unresolved".to_owned(), |b| b.to_string());
                println!(
                    "{} N={}: empirical {b}, threshold {}",
                    r.network, r.n, r.theoretical_threshold
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NETGAME_LOG", "warn")).init();
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Analyze(c)
        | Command::Simulate(c)
        | Command::Qre(c)
        | Command::Boxplot(c)
        | Command::Boundary(c) => c.threads,
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        error!("cannot configure thread pool: {e}");
        return ExitCode::from(2);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netgame: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
