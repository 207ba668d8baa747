mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "sampler", version, about = "Sampling constants and bound checks for dominating sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative density of a region on a grid of pseudohyperbolic disks.
    Density(Knobs),
    /// Restricted sampling constant over polynomials of bounded degree.
    Constant(Knobs),
    /// Measured constant next to the lower and necessary upper bounds.
    Bound(Knobs),
    /// Good-disk decomposition of a function on the dyadic lattice.
    Gooddisks(Knobs),
    /// Remez sweep and fitted Remez constant.
    Remez(Knobs),
    /// Fock space analogues: sampling constants and lattice overlap.
    Fock(Knobs),
    /// Combines `bound` results into one comparison table.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Knobs {
    /// Region JSON file or catalog name such as `grating(8,0.5)`.
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Sublevel measures (`remez`, as fractions of the area) or the base
    /// radius (`gooddisks`); comma separated for `remez`.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub bound_config: Option<PathBuf>,
    /// JSON output path; CSV tables go next to it with a `.csv` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Function JSON file (`gooddisks`).
    #[arg(long)]
    pub function: Option<PathBuf>,
    #[arg(long)]
    pub n_max: Option<u32>,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Result files written by `bound`.
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub bound_config: Option<PathBuf>,
    /// Refit `c1` and `k_nec` on the combined rows.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SAMPLER_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("SAMPLER_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let artifacts = match cli.command {
        Command::Density(k) => commands::density(&k)?,
        Command::Constant(k) => commands::constant(&k)?,
        Command::Bound(k) => commands::bound(&k)?,
        Command::Gooddisks(k) => commands::gooddisks(&k)?,
        Command::Remez(k) => commands::remez(&k)?,
        Command::Fock(k) => commands::fock(&k)?,
        Command::Report(a) => commands::report(&a)?,
    };
    artifacts.emit()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", json!({ "error": { "kind": err.kind, "message": err.message } }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", json!({ "error": { "kind": err.kind, "message": err.message } }));
            ExitCode::from(if err.kind == "usage" { 2 } else { 1 })
        }
    }
}
