//! `refnet` command-line interface.

mod analyses;
mod commands;
mod config;
mod input;
mod manifest;
mod output;
mod pipeline;
mod plots;

use clap::{Parser, Subcommand};
use input::InputError;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "refnet", version, about = "Physician referral-network analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate referral files and write a binary record file.
    Ingest(commands::IngestArgs),
    /// Build a graph (optionally state-labelled, optionally a subnetwork) and cache it.
    Graph(commands::GraphArgs),
    /// Degree, clustering, assortativity, reciprocity, components and diameter.
    Metrics(commands::MetricsArgs),
    /// Discrete power-law fits of in- and out-degrees with bootstrap p-values.
    Powerlaw(commands::PowerlawArgs),
    /// Core-periphery scores.
    Cp(commands::CpArgs),
    /// Triad census (exact or sampled).
    Triads(commands::TriadArgs),
    /// Generate an Erdős–Rényi or Watts–Strogatz graph.
    Null(commands::NullArgs),
    /// Small-world test against an Erdős–Rényi graph of the same density.
    Smallworld(commands::SmallworldArgs),
    /// Interstate flow matrix and gravity-model fit.
    Gravity(commands::GravityArgs),
    /// Per-state feature vectors f1..f31.
    Features(commands::FeaturesArgs),
    /// Correlations and mixed-effects models of health outcomes on features.
    Regress(commands::RegressArgs),
    /// Run a configured multi-year analysis.
    Pipeline(pipeline::PipelineArgs),
}

fn configure_threads() -> Result<(), anyhow::Error> {
    let Ok(v) = std::env::var("REFNET_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| input::input_error(format!("REFNET_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<InputError>()) {
        1
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a)?,
        Command::Graph(a) => commands::graph(&a)?,
        Command::Metrics(a) => commands::metrics(&a)?,
        Command::Powerlaw(a) => commands::powerlaw(&a)?,
        Command::Cp(a) => commands::cp(&a)?,
        Command::Triads(a) => commands::triads_cmd(&a)?,
        Command::Null(a) => commands::null(&a)?,
        Command::Smallworld(a) => commands::smallworld(&a)?,
        Command::Gravity(a) => commands::gravity(&a)?,
        Command::Features(a) => commands::features(&a)?,
        Command::Regress(a) => commands::regress(&a)?,
        Command::Pipeline(a) => return pipeline::run(&a),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
