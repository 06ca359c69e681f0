use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catecon_core::dispatch::{dispatch_str, Flags, RunOutput, EXIT_ERROR};
use catecon_core::load_scenario;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// JSON run report
    Report,
    /// line-delimited event log (simulate only)
    Log,
}

/// Run a catecon scenario.
///
/// Exit status is 0 on success, 1 when a law check fails or arbitrage is
/// found, and 2 on errors.
#[derive(Debug, Parser)]
#[command(name = "catecon", version)]
struct Cli {
    /// check-laws, detect-arbitrage, simulate, optimize-design,
    /// optimize-price or segment-report
    command: String,
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of market rounds
    #[arg(long)]
    rounds: Option<u32>,
    /// Overrides the surplus split, in [0, 1]
    #[arg(long)]
    split: Option<f64>,
    /// Directory for report.json and, after simulate, events.jsonl
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout
    #[arg(long, value_enum, default_value = "report")]
    format: Format,
}

fn write_outputs(dir: &Path, output: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), output.report.to_json() + "\n")?;
    if let Some(log) = &output.log {
        std::fs::write(dir.join("events.jsonl"), log.to_lines())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<i32, String> {
    let scenario = load_scenario(&cli.scenario).map_err(|e| e.to_string())?;
    let flags = Flags {
        seed: cli.seed,
        rounds: cli.rounds,
        split: cli.split,
    };
    let output = dispatch_str(&cli.command, &scenario, &flags).map_err(|e| e.to_string())?;
    if let Some(dir) = &cli.out {
        write_outputs(dir, &output).map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
    }
    let text = match cli.format {
        Format::Report => output.report.to_json() + "\n",
        Format::Log => match &output.log {
            Some(log) => log.to_lines(),
            None => return Err(format!("--format log needs `simulate`, not `{}`", cli.command)),
        },
    };
    // A closed pipe (e.g. `| head`) is not an error.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    for warning in &output.report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
