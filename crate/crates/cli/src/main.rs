use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qkam_cli::commands::Command;
use qkam_cli::config::{Overrides, RunConfig};
use qkam_cli::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qkam", version, about = "Kicked LMG Floquet laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides QKAM_OUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    j: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Neither read nor write the results cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// H0 spectrum, quantum vs classical periods, resonance selections.
    Spectrum,
    /// Floquet summary: quasienergies, association, F_max, V_k, PR.
    Floquet,
    /// Husimi functions of H0 or Floquet states.
    Husimi,
    /// Stroboscopic Poincaré section of the classical kicked map.
    Poincare,
    /// Critical kick strength of selected levels.
    Epsmax,
    /// ε_max over a J grid with a power-law fit.
    Scaling,
    /// Perturbative coefficients and ε_max predictions.
    Upt,
}

impl Cmd {
    fn command(&self) -> Command {
        match self {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Floquet => Command::Floquet,
            Cmd::Husimi => Command::Husimi,
            Cmd::Poincare => Command::Poincare,
            Cmd::Epsmax => Command::Epsmax,
            Cmd::Scaling => Command::Scaling,
            Cmd::Upt => Command::Upt,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = e.report();
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        j: cli.j,
        tau: cli.tau,
        epsilon: cli.epsilon,
        workers: cli.workers,
        out: cli.out.clone(),
        no_cache: cli.no_cache,
    };
    let env_out = std::env::var_os("QKAM_OUT_DIR").map(PathBuf::from);
    let cfg = RunConfig::load(cli.config.as_deref())?.resolve(&overrides, env_out)?;
    let summary = qkam_cli::run(cli.command.command(), &cfg, None)?;
    println!(
        "{}",
        serde_json::json!({
            "status": "ok",
            "command": summary.manifest.command,
            "out_dir": summary.out_dir,
            "cache_hit": summary.manifest.cache_hit,
            "n_floquet_solves": summary.manifest.n_floquet_solves,
        })
    );
    Ok(())
}
