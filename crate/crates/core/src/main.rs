use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asyncpd::harness::{build_instance, cache_reference, run_experiment, RawConfig};
use asyncpd::Result;

#[derive(Parser)]
#[command(name = "asyncpd", version, about = "Asynchronous decentralized primal-dual experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seed sweep and write per-seed traces plus summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        /// Comma list (1,2,3) or range (0..20).
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Any other config key, as key=value. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check the config and the schedule conditions without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the centralized reference and cache it in the output directory.
    Reference {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            config,
            algo,
            m,
            n,
            seeds,
            out,
            set,
        } => {
            let mut raw = RawConfig::read(&config)?;
            for kv in &set {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| asyncpd::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
                raw.set(k.trim(), v.trim())?;
            }
            let flags = [
                ("algo", algo),
                ("m", m.map(|v| v.to_string())),
                ("N", n.map(|v| v.to_string())),
                ("seeds", seeds),
                ("out", out.map(|p| p.display().to_string())),
            ];
            for (k, v) in flags {
                if let Some(v) = v {
                    raw.set(k, &v)?;
                }
            }
            let cfg = raw.build()?;
            let summary = run_experiment(&cfg)?;
            println!("{:>8} {:>12} {:>14} {:>14} {:>14}", "k", "comm_rounds", "grad_evals", "objective", "feasibility");
            for r in &summary.rows {
                println!(
                    "{:>8} {:>12} {:>14.1} {:>14.6e} {:>14.6e}",
                    r.k, r.comm_rounds, r.grad_evals_mean, r.objective_mean, r.feasibility_mean
                );
            }
            println!("wrote {}", summary.summary_path.display());
        }
        Command::Validate { config } => {
            let cfg = RawConfig::read(&config)?.build()?;
            let inst = build_instance(&cfg)?;
            println!(
                "ok: {} on m = {} (d_max = {}), N = {}, total inner steps = {}",
                inst.schedule.regime.name(),
                inst.topology.m(),
                inst.topology.d_max(),
                inst.schedule.n,
                inst.schedule.total_inner_steps()
            );
        }
        Command::Reference { config } => {
            let cfg = RawConfig::read(&config)?.build()?;
            let (r, path) = cache_reference(&cfg)?;
            println!("F* = {} ({}, certificate {:e})", r.f_star, r.method.name(), r.certificate);
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run_command(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
