//! Command-line front end for the `gatefield` optimizer.
//!
//! Three subcommands cover the batch workflow:
//!
//! - `optimize` runs one gate-synthesis optimization from a flat key/value
//!   config file and persists a results directory (config snapshot,
//!   per-iteration diagnostics, final field, spectrum, manifest, README);
//! - `sweep-qubits` repeats the optimization over a list of register sizes,
//!   emits a combined milestone table, and fits the iteration-scaling law;
//! - `analyze` re-derives intensity and spectrum from a persisted field
//!   table and verifies them against the run's own artifacts, confirming
//!   that results survive the round trip through text files.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 malformed configuration
//! (the message names the offending key), 3 monotonic-descent abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gatefield::{
    field_spectrum, integrated_intensity, parse_field_table, parse_iterations_column,
    parse_spectrum_table, persist_run, run_from_config, sweep_qubits, sweep_table,
    write_sweep_dir, Error, RunConfig,
};

/// Absolute mismatch allowed when quantities recomputed from persisted
/// tables are compared against the values the run itself wrote. Tables are
/// printed with 17 significant digits, so the round trip is exact and this
/// tolerance is pure slack.
const ROUND_TRIP_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "gatefield",
    about = "Iterative gate-synthesis field optimizer for two-surface multilevel systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and persist its results directory.
    Optimize(OptimizeArgs),
    /// Run one optimization per register size and fit the iteration-scaling law.
    SweepQubits(SweepArgs),
    /// Verify a persisted run directory by recomputing derived quantities.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    /// Flat key/value config file.
    #[arg(long)]
    config: PathBuf,
    /// Directory to create the run artifacts in.
    #[arg(long)]
    out: PathBuf,
    /// Suppress the progress report on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat key/value config file used as the base for every register size.
    #[arg(long)]
    config: PathBuf,
    /// Directory to create the per-size run directories and combined table in.
    #[arg(long)]
    out: PathBuf,
    /// Register sizes to run, e.g. `--qubits 1,2,3`.
    #[arg(long, value_delimiter = ',', required = true)]
    qubits: Vec<u32>,
    /// Worker threads for the per-size runs.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Suppress the progress report on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Existing run directory (as written by `optimize`).
    #[arg(long)]
    out: PathBuf,
    /// Suppress the report on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(args) => cmd_optimize(&args),
        Command::SweepQubits(args) => cmd_sweep(&args),
        Command::Analyze(args) => cmd_analyze(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Maps failures onto the documented exit codes: malformed configuration is
/// 2, a monotonic-descent abort is 3, anything else is 1.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 2,
        Error::Monotonicity { .. } => 3,
        _ => 1,
    }
}

fn cmd_optimize(args: &OptimizeArgs) -> gatefield::Result<()> {
    let config = RunConfig::from_file(&args.config)?;
    let result = run_from_config(&config)?;
    persist_run(&args.out, &result)?;
    if !args.quiet {
        let last = result
            .outcome
            .records
            .last()
            .expect("a run always has its initial record");
        println!(
            "optimize: {} sweeps, stop: {}, fidelity {:.4}, J_norm {:.6}, intensity {:.4}",
            last.iteration,
            result.outcome.diagnostics.stop_reason.as_str(),
            last.fidelity,
            last.j_norm,
            last.intensity,
        );
        println!("optimize: wall clock {:.2} s", result.wall_clock.as_secs_f64());
        println!("optimize: results in {}", args.out.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> gatefield::Result<()> {
    let base = RunConfig::from_file(&args.config)?;
    let sweep = sweep_qubits(&base, &args.qubits, args.threads)?;
    write_sweep_dir(&args.out, &sweep)?;
    if !args.quiet {
        print!("{}", sweep_table(&sweep.runs));
        match &sweep.fit {
            Ok(fit) => println!(
                "scaling fit: a = {:.6}, b = {:.6}, max log-residual = {:.3e}",
                fit.a, fit.b, fit.residual
            ),
            Err(message) => println!("scaling fit: {message}"),
        }
        println!("sweep-qubits: results in {}", args.out.display());
    }
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> gatefield::Result<()> {
    let dir = &args.out;
    let config = RunConfig::parse_str(&read(dir, "config.txt")?)?;
    let field = parse_field_table(&read(dir, "field.tsv")?)?;

    let intensity = integrated_intensity(&field, config.mu0);
    let spectrum = field_spectrum(&field);

    let persisted_intensity = *parse_iterations_column(&read(dir, "iterations.tsv")?, "intensity")?
        .last()
        .expect("parse_iterations_column rejects empty tables");
    let persisted_spectrum = parse_spectrum_table(&read(dir, "spectrum.tsv")?)?;

    let intensity_dev = (intensity - persisted_intensity).abs();
    if intensity_dev > ROUND_TRIP_TOL {
        return Err(Error::Numeric(format!(
            "intensity recomputed from field.tsv ({intensity:e}) deviates from the \
             persisted value ({persisted_intensity:e}) by {intensity_dev:e}"
        )));
    }
    if persisted_spectrum.len() != spectrum.len() {
        return Err(Error::Numeric(format!(
            "spectrum.tsv has {} bins but the field table implies {}",
            persisted_spectrum.len(),
            spectrum.len()
        )));
    }
    let mut spectrum_dev = 0.0_f64;
    for (recomputed, persisted) in spectrum.iter().zip(&persisted_spectrum) {
        spectrum_dev = spectrum_dev
            .max((recomputed.frequency - persisted.frequency).abs())
            .max((recomputed.magnitude - persisted.magnitude).abs());
    }
    if spectrum_dev > ROUND_TRIP_TOL {
        return Err(Error::Numeric(format!(
            "spectrum recomputed from field.tsv deviates from spectrum.tsv by {spectrum_dev:e}"
        )));
    }

    if !args.quiet {
        let half = spectrum.len() / 2;
        let peak = spectrum[1..=half.max(1)]
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
            .expect("spectrum has at least one positive-frequency bin");
        println!(
            "analyze: integrated intensity {intensity:.6} (round-trip deviation {intensity_dev:.1e})"
        );
        println!(
            "analyze: dominant spectral bin at omega = {:.6} a.u. (magnitude {:.6})",
            peak.frequency, peak.magnitude
        );
        println!(
            "analyze: spectrum round-trip deviation {spectrum_dev:.1e} over {} bins (tolerance {ROUND_TRIP_TOL:.0e})",
            spectrum.len()
        );
    }
    Ok(())
}

fn read(dir: &Path, name: &str) -> gatefield::Result<String> {
    Ok(std::fs::read_to_string(dir.join(name))?)
}
