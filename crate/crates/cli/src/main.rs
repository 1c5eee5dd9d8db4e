use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{Body, Output};
use config::{CommonArgs, Defaults, Format, RunConfig};

/// Exit status when the artifact was written but some cells failed.
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "moran", version, about = "Moran process with mutation: exact chain, simulation and asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-round and scaled transition rates on the lattice.
    Rates(CommonArgs),
    /// Stationary distribution; methods exact, diffusion, monte-carlo.
    Stationary(CommonArgs),
    /// Equilibrium branches over a mu grid, with folds and critical rates.
    Bifurcation(CommonArgs),
    /// Switching times; methods exact, diffusion, wkb, monte-carlo.
    Mfpt(CommonArgs),
    /// Mu sweeps: occupancy heatmap (default) or per-basin moments.
    Sweep(CommonArgs),
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<()> {
    match write_body(cfg, out) {
        // a closed downstream pipe (`| head`) is not an error
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => Ok(()),
        other => other,
    }
}

fn write_body(cfg: &RunConfig, out: &Output) -> Result<()> {
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    match &out.body {
        Body::Csv(bytes) => sink.write_all(bytes)?,
        Body::Json(v) => {
            serde_json::to_writer_pretty(&mut sink, v)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (args, defaults, handler): (_, _, fn(&RunConfig) -> Result<Output>) = match &cli.command {
        Command::Rates(a) => (a, Defaults { methods: &[], format: Format::Csv }, commands::rates),
        Command::Stationary(a) => (a, Defaults { methods: &["exact"], format: Format::Csv }, commands::stationary),
        Command::Bifurcation(a) => (a, Defaults { methods: &[], format: Format::Json }, commands::bifurcation),
        Command::Mfpt(a) => (
            a,
            Defaults { methods: &["exact", "diffusion", "wkb"], format: Format::Json },
            commands::mfpt,
        ),
        Command::Sweep(a) => (a, Defaults { methods: &["heatmap"], format: Format::Csv }, commands::sweep),
    };
    let cfg = RunConfig::resolve(args, &defaults)?;
    let out = handler(&cfg)?;
    emit(&cfg, &out)?;
    for note in &out.notes {
        eprintln!("note: {note}");
    }
    for failure in &out.failures {
        eprintln!("incomplete: {failure}");
    }
    Ok(if out.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_PARTIAL) })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
