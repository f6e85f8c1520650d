//! Command-line front end: binds metric configs to the five pipelines and
//! writes artifact files.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical error, 4 timeout.

mod commands;
mod spec;

use clap::{Parser, Subcommand};
use finsler_sphere::error::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fsphere", version, about = "Finsler 2-sphere laboratory")]
struct Cli {
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for family evolution and grid shooting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized grids and perturbations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a loop under the curve-shortening semi-flow.
    Flow,
    /// Run the three-sweepout min-max search and write the spectrum table.
    Minmax,
    /// Build the Birkhoff annulus over a closed geodesic: return map
    /// samples, twist report, and periodic points.
    Birkhoff,
    /// Morse index table of a closed geodesic and its iterates.
    Index,
    /// Run the invariant battery for a metric.
    Validate,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (Some(config), Some(out)) = (cli.config.as_ref(), cli.out.as_ref()) else {
        eprintln!("error: --config and --out are required");
        return 2;
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create output directory: {e}");
        return 2;
    }
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", config.display());
            return 2;
        }
    };
    let result = match cli.command {
        Command::Flow => commands::flow::run(&text, out, cli.seed),
        Command::Minmax => commands::minmax::run(&text, out, cli.seed),
        Command::Birkhoff => commands::birkhoff::run(&text, out, cli.seed),
        Command::Index => commands::index::run(&text, out, cli.seed),
        Command::Validate => commands::validate::run(&text, out, cli.seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify(&e)
        }
    }
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) => 2,
        Error::Timeout { .. } => 4,
        _ => 3,
    }
}
