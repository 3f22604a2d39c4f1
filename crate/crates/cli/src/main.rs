mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use crate::commands::Options;
use crate::manifest::RunManifest;

/// Peridynamic wave simulations with a discrete perfectly matched layer.
#[derive(Debug, Parser)]
#[command(name = "pdpml", version)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reject time steps above the stability estimate instead of warning.
    #[arg(long, global = true)]
    strict_cfl: bool,
    /// Write snapshots as little-endian f64 with a text header sidecar.
    #[arg(long, global = true)]
    binary: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the stencil and write stencil.csv.
    Stencil,
    /// Run the layer problem and write snapshots and probe traces.
    Run,
    /// Solve on the enlarged layer-free domain and write snapshots restricted to the physical box.
    Reference,
    /// Compare snapshot dumps of a run with those of a reference and write reflection.csv.
    Compare {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        ref_dir: PathBuf,
    },
    /// Tabulate the per-cell decay rate over damping values and wave vectors.
    ScanSigma {
        /// Also measure the reflection of paired runs against the reference.
        #[arg(long)]
        measure: bool,
    },
    /// Errors against a fine reference on nested meshes, with fitted slopes.
    Convergence,
    /// Run and write the discrete energy trace.
    Energy,
    /// Discrete holomorphy and layer-equation residuals for sample modes.
    Verify,
    /// Time the stencil and a number of steps.
    Bench {
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Stencil => "stencil",
            Command::Run => "run",
            Command::Reference => "reference",
            Command::Compare { .. } => "compare",
            Command::ScanSigma { .. } => "scan-sigma",
            Command::Convergence => "convergence",
            Command::Energy => "energy",
            Command::Verify => "verify",
            Command::Bench { .. } => "bench",
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = match (&cli.command, &cli.config) {
        (Command::Compare { .. }, None) => None,
        (_, None) => anyhow::bail!("--config is required for '{}'", cli.command.name()),
        (_, Some(path)) => {
            let mut c = config::parse_config(path)?;
            c.time.strict_cfl |= cli.strict_cfl;
            Some(c)
        }
    };
    let mut m = RunManifest::start(&cli.out, cli.command.name(), config.clone())?;
    if let Some(cfg) = &config {
        let text = cfg.to_text();
        m.create("config.resolved.toml", |w| {
            std::io::Write::write_all(w, text.as_bytes())?;
            Ok(())
        })?;
    }
    let opts = Options { binary: cli.binary };
    let result = match (&cli.command, &config) {
        (Command::Compare { run_dir, ref_dir }, _) => commands::compare(&mut m, run_dir, ref_dir),
        (cmd, Some(cfg)) => match cmd {
            Command::Stencil => commands::stencil(&mut m, cfg),
            Command::Run => commands::run(&mut m, cfg, &opts),
            Command::Reference => commands::reference(&mut m, cfg, &opts),
            Command::ScanSigma { measure } => commands::scan_sigma(&mut m, cfg, *measure),
            Command::Convergence => commands::convergence(&mut m, cfg),
            Command::Energy => commands::energy(&mut m, cfg),
            Command::Verify => commands::verify(&mut m, cfg),
            Command::Bench { steps } => commands::bench(&mut m, cfg, *steps),
            Command::Compare { .. } => unreachable!(),
        },
        (_, None) => unreachable!(),
    };
    m.finish(&result)?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
