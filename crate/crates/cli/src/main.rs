use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use descriptor_cli::{run, Command, RunConfig};
use descriptor_core::fracops::SeriesControl;
use descriptor_core::pencil::{DEFAULT_SEED, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "descsys", version, about = "Analyze and simulate singular discrete-time systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regularity, finite spectrum and Weierstrass structure of the pencil.
    Analyze(Flags),
    /// Closed-form trajectory of the standard system.
    Simulate(Flags),
    /// Closed-form trajectory of the nabla fractional system.
    SimulateFrac(Flags),
    /// State and output causality.
    Causality(Flags),
    /// Recompute a trajectory and check it against the oracles.
    Verify(Flags),
}

#[derive(Args)]
struct Flags {
    /// System definition (JSON).
    #[arg(long)]
    system: PathBuf,
    /// Horizon K (overrides the file).
    #[arg(long)]
    horizon: Option<usize>,
    /// Fractional order n in (0, 1) (overrides the file).
    #[arg(long)]
    order: Option<f64>,
    /// Relative rank / causality tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Mittag-Leffler truncation tolerance.
    #[arg(long, default_value_t = SeriesControl::default().tol)]
    ml_tol: f64,
    /// Mittag-Leffler term cap.
    #[arg(long, default_value_t = SeriesControl::default().max_terms)]
    ml_max_terms: usize,
    /// Seed for the regularity probes.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file for the trajectory or report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an inconsistent Y0 by its projection onto the consistent set.
    #[arg(long)]
    project: bool,
    /// Construct the maximal causal input matrix.
    #[arg(long = "max-B")]
    max_b: bool,
    /// Extend short input sequences with zeros.
    #[arg(long)]
    zero_pad: bool,
}

fn config(command: Command, f: Flags) -> RunConfig {
    RunConfig {
        command,
        system_path: f.system,
        horizon: f.horizon,
        order: f.order,
        tol: f.tol,
        ml_tol: f.ml_tol,
        ml_max_terms: f.ml_max_terms,
        seed: f.seed,
        out: f.out,
        project: f.project,
        max_b: f.max_b,
        zero_pad: f.zero_pad,
    }
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
    let cfg = match cli.command {
        Cmd::Analyze(f) => config(Command::Analyze, f),
        Cmd::Simulate(f) => config(Command::Simulate, f),
        Cmd::SimulateFrac(f) => config(Command::SimulateFrac, f),
        Cmd::Causality(f) => config(Command::Causality, f),
        Cmd::Verify(f) => config(Command::Verify, f),
    };
    let outcome = run(&cfg);
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.exit_code as u8)
}
