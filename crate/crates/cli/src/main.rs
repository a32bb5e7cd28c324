//! `qsb`: file-driven front end for the bridge, Bohm, wavepacket, MFG and
//! metric tools. Every command is a pure function of its config and seed.

// `!(x >= 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "qsb",
    version,
    about = "Quantum Schrödinger bridges, wavepackets and crowd navigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Seed overriding the config seed (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run the command's checks; exit with status 3 if any fails.
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian bridge marginals on a time grid; `--verify` adds PDE residuals.
    Bridge(Common),
    /// Bohm potential of a Gaussian mixture on a grid.
    Bohm(Common),
    /// Train a mixture bridge between two sample files.
    Wavepacket(Common),
    /// Crowd navigation through an obstacle field.
    Mfg {
        /// JSON config file; optional when `--env` is given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in environment: s_tunnel or u_tunnel.
        #[arg(long)]
        env: Option<String>,
        /// Seed overriding the config seed (default 42).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Check loss decrease, fixed endpoints and collisions below 1%.
        #[arg(long)]
        verify: bool,
    },
    /// Exact EMD between two sample CSVs.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// Cap on the points per set; larger sets are subsampled.
        #[arg(long)]
        subsample: Option<usize>,
        /// Also report W2 between moment-fitted Gaussians.
        #[arg(long)]
        gaussian_fit: bool,
        /// Seed for subsampling (default 42).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `metrics.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bridge(c) => cmd::bridge::run(&c.config, c.seed, &c.out, c.verify),
        Command::Bohm(c) => cmd::bohm::run(&c.config, &c.out, c.verify),
        Command::Wavepacket(c) => cmd::wavepacket::run(&c.config, c.seed, &c.out, c.verify),
        Command::Mfg {
            config,
            env,
            seed,
            out,
            verify,
        } => cmd::mfg::run(config.as_deref(), env.as_deref(), seed, &out, verify),
        Command::Metrics {
            a,
            b,
            subsample,
            gaussian_fit,
            seed,
            out,
        } => cmd::metrics::run(&a, &b, subsample, gaussian_fit, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QSB_LOG", "error")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
