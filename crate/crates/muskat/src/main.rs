use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muskat::error::{RunError, EXIT_IO};
use muskat::{execute, parse_config, validate, ScenarioConfig};

#[derive(Parser)]
#[command(name = "muskat", version, about = "One-phase Muskat splash simulator")]
struct Cli {
    /// Directory for run artifacts; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Run the operator and invariant suite.
    Selftest,
    /// Report the geometry of a snapshot CSV; exits 3 if the curve is not admissible.
    ValidateCurve { snapshot: PathBuf },
}

fn run_config(mut config: ScenarioConfig, output_dir: Option<PathBuf>) -> Result<i32, RunError> {
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    eprintln!(
        "scenario {} (n = {}) -> {}",
        config.scenario,
        config.n,
        config.output_dir.display()
    );
    let finished = execute(&config)?;
    let m = &finished.manifest;
    for check in &m.acceptance {
        println!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if let Some(s) = &m.splash {
        println!("splash: {} at T_s = {:?}", s.is_splash, s.t_s);
    }
    println!("termination: {}", m.termination);
    println!("manifest: {}", finished.manifest_path.display());
    Ok(finished.exit_code)
}

fn dispatch(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            run_config(parse_config(&text)?, cli.output_dir)
        }
        Command::Selftest => run_config(ScenarioConfig::default(), cli.output_dir),
        Command::ValidateCurve { snapshot } => {
            let report = validate::validate_file(&snapshot)?;
            println!("{report}");
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("muskat: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_IO as u8))
}
