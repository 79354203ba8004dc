//! `qgate`: run optimization campaigns, analyze their records, run the
//! self-check suites and inspect single protocols.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 failed validation
//! or an empty selection, 3 unreadable or malformed input/output files.

/// Prints a line to stdout. A closed pipe (`qgate ... | head`) is not an error.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgate_core::{ConstraintMode, LoopClass, Suite};

use crate::parse::{parse_angle, parse_phase_target, Report};

#[derive(Debug, Parser)]
#[command(name = "qgate", version, about = "Pulse-sequence design and mechanism analysis for Rydberg CZ gates")]
struct Cli {
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true, env = "QGATE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multi-start optimization; writes one JSON record per start.
    Optimize(OptimizeArgs),
    /// Builds a statistics table from a record file.
    Analyze(AnalyzeArgs),
    /// Runs a self-check suite; exits with 2 when any check fails.
    Validate(ValidateArgs),
    /// Prints everything known about one protocol file.
    Show(ShowArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub pulses: usize,
    /// Lower bound on the constrained geometrical factors.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = ConstraintMode::AbsB)]
    pub mode: ConstraintMode,
    #[arg(long, default_value_t = 1000)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest pulse area, e.g. `12pi` or `37.7`.
    #[arg(long, default_value = "12pi", value_parser = parse_angle)]
    pub area_max: f64,
    /// Search over signed areas in [-area-max, area-max].
    #[arg(long)]
    pub signed_areas: bool,
    /// Optimize the gate built from one pathway class of |00>.
    #[arg(long)]
    pub target_mechanism: Option<LoopClass>,
    /// Weight on the non-target pathway amplitudes (mechanism-guided runs).
    #[arg(long, default_value_t = 0.0)]
    pub mech_penalty: f64,
    /// Accepted phase patterns: `any` (all CZ local-phase equivalents) or `all-negative`.
    #[arg(long, default_value = "any", value_parser = parse_phase_target)]
    pub phase_target: qgate_core::PhaseTarget,
    #[arg(long, default_value_t = 10.0)]
    pub penalty_weight: f64,
    /// Simplex iteration cap (default: 400 per free parameter).
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// success-rate | area-total | area-cumulative | area-joint:I,J | cos-beta:I,J | msquare:V|A|B | mcube
    #[arg(long)]
    pub report: Report,
    /// Error cut applied before building distributions.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Area bin width, e.g. `0.05pi`.
    #[arg(long, default_value = "0.05pi", value_parser = parse_angle)]
    pub bin: f64,
    /// Cells per axis of the m-square grid.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// jaksch | pathsum | eq7 | oracle | symmetries
    #[arg(long)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    #[arg(long)]
    pub protocol: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Validate(a) => commands::validate(a),
        Command::Show(a) => commands::show(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
