use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rovctl::commands;
use rovctl::config::{parse_file, parse_override, resolve};
use rovctl::error::CliError;

#[derive(Parser)]
#[command(
    name = "rovctl",
    version,
    about = "Depth-control simulations for a tethered underwater vehicle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file
    #[arg(long)]
    config: PathBuf,

    /// Output directory
    #[arg(long, env = "ROVCTL_OUT", default_value = "rovctl-out")]
    out: PathBuf,

    /// Override one config key, repeatable (KEY=VALUE)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes trace.csv and metrics.txt
    Run {
        #[command(flatten)]
        common: Common,

        /// Disable the neural compensator for this run
        #[arg(long)]
        no_ann: bool,
    },
    /// Run the scenario with and without compensation and compare the metrics
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the scenario for each value of one config key
    Sweep {
        #[command(flatten)]
        common: Common,

        /// Config key to sweep
        #[arg(long)]
        key: String,

        /// Comma-separated values for the swept key
        #[arg(long)]
        values: String,

        /// Disable the neural compensator for all members
        #[arg(long)]
        no_ann: bool,
    },
    /// Parse the config, apply overrides and echo the resolved values
    Validate {
        /// Scenario config file
        #[arg(long)]
        config: PathBuf,

        /// Override one config key, repeatable (KEY=VALUE)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,

        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn overrides_of(set: &[String]) -> Result<Vec<(String, String)>, CliError> {
    set.iter().map(|s| parse_override(s)).collect()
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, no_ann } => {
            let entries = parse_file(&common.config)?;
            let overrides = overrides_of(&common.set)?;
            let resolved = resolve(&entries, &overrides, common.seed, no_ann)?;
            commands::run(&resolved, &common.out)
        }
        Command::Compare { common } => {
            let entries = parse_file(&common.config)?;
            let overrides = overrides_of(&common.set)?;
            let resolved = resolve(&entries, &overrides, common.seed, false)?;
            commands::compare(&resolved, &common.out)
        }
        Command::Sweep {
            common,
            key,
            values,
            no_ann,
        } => {
            let entries = parse_file(&common.config)?;
            let overrides = overrides_of(&common.set)?;
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            commands::sweep(
                &entries,
                &overrides,
                common.seed,
                no_ann,
                &key,
                &values,
                &common.out,
            )
        }
        Command::Validate { config, set, seed } => {
            let entries = parse_file(&config)?;
            let overrides = overrides_of(&set)?;
            let resolved = resolve(&entries, &overrides, seed, false)?;
            commands::validate(&resolved)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
