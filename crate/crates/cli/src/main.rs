use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehcr_cli::sweep::{parse_values, Axis};
use ehcr_cli::{commands, CliError, Config, ModeSelection};

/// Energy-harvesting cognitive secondary user: bounds, optimization and simulation.
#[derive(Debug, Parser)]
#[command(name = "ehcr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat TOML configuration file; omitted keys take reference values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bound(s) to evaluate.
    #[arg(long, global = true, value_name = "lower|upper|both")]
    mode: Option<ModeSelection>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    restarts: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    slots: Option<u64>,
    /// Write CSV output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Pair busy-sensed access with Ps3 and post-NACK access with Ps2 in the throughput sum.
    #[arg(long, global = true)]
    eq6_literal: bool,
    /// Constrain Ps3 <= Ps2 <= Ps1 during optimization.
    #[arg(long, global = true)]
    enforce_power_order: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the configured policy.
    Eval,
    /// Optimize the policy at each point of one parameter axis.
    Sweep {
        #[arg(long, value_name = "lambda_p|lambda_e|q|D_max")]
        axis: Axis,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_name = "V1,V2,...", allow_hyphen_values = true)]
        values: String,
        /// Fix all powers at P_max.
        #[arg(long)]
        pin_powers: bool,
    },
    /// Simulate the configured policy slot by slot.
    Simulate,
    /// Optimize the policy.
    Optimize,
    /// Check the analytical model against Monte Carlo oracles.
    Validate,
    /// Print the effective configuration as TOML.
    DumpConfig,
}

fn effective_config(common: &Common) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(m) = common.mode {
        cfg.mode = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.restarts {
        cfg.restarts = r;
    }
    if let Some(s) = common.slots {
        cfg.slots = s;
    }
    cfg.eq6_literal |= common.eq6_literal;
    cfg.enforce_power_order |= common.enforce_power_order;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(common: &Common, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = effective_config(&cli.common)?;
    let text = match cli.command {
        Command::Eval => commands::eval(&cfg)?,
        Command::Sweep { axis, values, pin_powers } => {
            cfg.pin_powers |= pin_powers;
            commands::sweep(&cfg, axis, parse_values(&values)?)?
        }
        Command::Simulate => commands::simulate_cmd(&cfg)?,
        Command::Optimize => commands::optimize(&cfg)?,
        Command::DumpConfig => commands::dump_config(&cfg),
        Command::Validate => {
            let report = commands::validate(&cfg)?;
            print!("{}", report.render());
            if let Some(path) = &cli.common.out {
                std::fs::write(path, report.render())?;
            }
            return match report.failures() {
                0 => Ok(()),
                failed => Err(CliError::ValidationFailed { failed }),
            };
        }
    };
    emit(&cli.common, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
