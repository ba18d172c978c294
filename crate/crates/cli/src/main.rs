use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use piezobeam_cli::{cmd_check, cmd_limit, cmd_modes, cmd_simulate, parse_config, CliError, ResultBundle};

#[derive(Parser)]
#[command(name = "piezobeam", version, about = "Piezoelectric beam and patch actuator models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured model from rest.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Lowest free-vibration modes.
    Modes {
        config: PathBuf,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Decoupling or voltage-selectivity checks; exits with 4 on failure.
    Check {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Electrostatic-limit sweep over decreasing permeabilities.
    Limit {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
}

fn load(path: &PathBuf) -> Result<piezobeam_cli::RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(piezobeam_cli::ConfigErrors(vec![piezobeam_cli::ConfigError {
            line: 0,
            column: 0,
            kind: piezobeam_cli::ConfigErrorKind::Parse(format!("cannot read {}: {e}", path.display())),
        }]))
    })?;
    Ok(parse_config(&text)?)
}

fn run(cli: Cli) -> Result<(ResultBundle, PathBuf), CliError> {
    Ok(match cli.command {
        Command::Simulate { config, out, svg } => (cmd_simulate(&load(&config)?, svg)?, out),
        Command::Modes { config, n, out, svg } => (cmd_modes(&load(&config)?, n, svg)?, out),
        Command::Check { config, out } => (cmd_check(&load(&config)?)?, out),
        Command::Limit { config, mu, out, svg } => (cmd_limit(&load(&config)?, &mu, svg)?, out),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((bundle, out)) => {
            if let Err(e) = bundle.write_to(&out) {
                eprintln!("error: cannot write to {}: {e}", out.display());
                return ExitCode::from(1);
            }
            for name in bundle.files.keys() {
                println!("{}", out.join(name).display());
            }
            if bundle.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("scenario check failed, see {}", out.join("report.json").display());
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
