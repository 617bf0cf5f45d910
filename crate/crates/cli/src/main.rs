use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sticky_heat_cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "sticky-heat", version, about = "Heat flow with mass-reservoir walls")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the wall traces and write field snapshots and diagnostics.
    Solve(Common),
    /// Monte Carlo estimate at the configured probe.
    Simulate(Common),
    /// Cross-check series, finite differences and Monte Carlo.
    Compare(Common),
    /// Sigma sweep and rescaled local-time table.
    Converge(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `outputs.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a few sample paths under `paths/` (simulate only).
    #[arg(long)]
    dump_paths: bool,
    /// Replace every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.cmd {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Converge(a) => (Command::Converge, a),
    };
    let ov = Overrides {
        out: args.out,
        dump_paths: args.dump_paths,
        seed: args.seed,
    };
    match run(cmd, &args.config, &ov) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sticky-heat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
