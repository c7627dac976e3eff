use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use tcrisk::fixtures;
use tcrisk::report::{self, ReportError, RunOptions, RunReport};
use tcrisk::scenario::{Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "tcrisk", version, about = "Risk-constrained finite-horizon MDP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Initial risk threshold (overrides the scenario's r0).
    #[arg(long, global = true, allow_negative_numbers = true)]
    r0: Option<f64>,

    /// Attach the brute-force oracle comparison.
    #[arg(long, global = true)]
    oracle: bool,

    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for rollout sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Number of rollout trajectories.
    #[arg(long, global = true, default_value_t = 1000)]
    n: usize,

    /// Audit every breakpoint of every value function, not only reachable nodes.
    #[arg(long, global = true)]
    audit_all_breakpoints: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and report value, policy, risk-to-go and audit.
    Solve { scenario: String },
    /// Audit the solver's plan and the constant-threshold baseline.
    Audit { scenario: String },
    /// Run a built-in demonstration: variance, avar or squander.
    Demo { name: String },
    /// Simulate trajectories under the solver's policy.
    Rollout { scenario: String },
    /// Solve by enumerating every deterministic policy.
    Oracle { scenario: String },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// A scenario path: an existing file, the same path with `.json` appended,
/// or `fixtures/<name>` for a shipped fixture.
fn load(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Scenario::load(path);
    }
    let with_ext = PathBuf::from(format!("{arg}.json"));
    if with_ext.is_file() {
        return Scenario::load(&with_ext);
    }
    let name = arg.strip_prefix("fixtures/").unwrap_or(arg);
    let name = name.strip_suffix(".json").unwrap_or(name);
    if let Some(sc) = fixtures::by_name(name) {
        return Ok(sc);
    }
    Scenario::load(path)
}

fn run(cli: &Cli) -> Result<RunReport, ReportError> {
    let opts = RunOptions {
        r0: cli.r0,
        oracle: cli.oracle,
        audit_all_breakpoints: cli.audit_all_breakpoints,
    };
    match &cli.command {
        Command::Solve { scenario } => report::solve_report(&load(scenario)?, &opts),
        Command::Audit { scenario } => report::audit_report(&load(scenario)?, &opts),
        Command::Demo { name } => report::demo_report(name, cli.r0),
        Command::Rollout { scenario } => {
            report::rollout_report(&load(scenario)?, &opts, cli.n, cli.seed)
        }
        Command::Oracle { scenario } => report::oracle_report(&load(scenario)?, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let rep = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = match cli.format {
        Format::Text => rep.to_text(),
        Format::Structured => rep.to_json_string(),
    };
    print!("{text}");
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    ExitCode::SUCCESS
}
