use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvcm::{run, run_preset, sweep, validate, CliError, ExitStatus, Preset, RunConfig, SweepSpec};

/// Structured collision-model simulator. Log verbosity follows RUST_LOG.
#[derive(Parser)]
#[command(name = "cvcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML scenario and write trajectory, ledger and summary.
    Run {
        config: PathBuf,
        /// Vary one parameter: <param>=<start>:<stop>:<n>.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Check a config without propagating it.
    Validate { config: PathBuf },
    /// Reproduce a figure's data (fig2 .. fig6).
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<ExitStatus, CliError> {
    match cmd {
        Command::Run { config, sweep: None } => Ok(run(&RunConfig::load(&config)?)?.exit_status()),
        Command::Run {
            config,
            sweep: Some(spec),
        } => {
            let spec: SweepSpec = spec.parse()?;
            Ok(sweep(&RunConfig::load(&config)?, &spec)?.1.exit_status())
        }
        Command::Validate { config } => {
            let report = validate(&RunConfig::load(&config)?);
            for line in &report {
                println!("{line}");
            }
            Ok(if report.is_empty() {
                println!("ok");
                ExitStatus::Success
            } else {
                ExitStatus::ConfigError
            })
        }
        Command::Preset { name, out } => Ok(run_preset(name.parse::<Preset>()?, &out)?.exit_status()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let status = execute(cli.command).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_status()
    });
    if status == ExitStatus::LawViolation {
        eprintln!("error: thermodynamic law check failed, see the summary file");
    }
    ExitCode::from(status as u8)
}
