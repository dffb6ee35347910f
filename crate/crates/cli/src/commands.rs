//! Subcommand bodies. Each returns the text the binary prints or writes.

use ehcr_core::{evaluate, maximize, simulate};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{csv_string, eval_header, eval_row, optim_header, optim_row, sim_header, sim_row};
use crate::sweep::{run_sweep, sweep_header, sweep_rows, Axis, SweepSpec};
use crate::validate::{run_validate, ValidationReport};

fn model_params(cfg: &Config) -> Result<ehcr_core::ScenarioParams, CliError> {
    let params = cfg.scenario();
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(params)
}

/// Evaluate the configured policy under each selected bound.
pub fn eval(cfg: &Config) -> Result<String, CliError> {
    let params = model_params(cfg)?;
    let policy = cfg.policy();
    let pairing = cfg.optim().pairing();
    let rows: Vec<_> = cfg
        .mode
        .modes()
        .iter()
        .map(|&m| eval_row(m, &evaluate(&params, &policy, m, pairing), &policy))
        .collect();
    csv_string(&eval_header(), &rows)
}

/// Maximize each selected bound.
pub fn optimize(cfg: &Config) -> Result<String, CliError> {
    let params = model_params(cfg)?;
    let opts = cfg.optim();
    let rows: Vec<_> = cfg
        .mode
        .modes()
        .iter()
        .map(|&m| optim_row(&maximize(&params, m, &opts)))
        .collect();
    csv_string(&optim_header(), &rows)
}

/// Simulate the configured policy.
pub fn simulate_cmd(cfg: &Config) -> Result<String, CliError> {
    let sim = cfg.sim();
    let r = simulate(&cfg.scenario(), &cfg.policy(), &sim).map_err(|e| CliError::Config(e.to_string()))?;
    csv_string(&sim_header(), &[sim_row(&r, sim.seed)])
}

pub fn sweep(cfg: &Config, axis: Axis, values: Vec<f64>) -> Result<String, CliError> {
    let spec = SweepSpec {
        axis,
        values,
        modes: cfg.mode.modes().to_vec(),
        fixed: cfg.scenario(),
        optim: cfg.optim(),
    };
    let rows = run_sweep(&spec)?;
    csv_string(&sweep_header(), &sweep_rows(axis, &rows))
}

pub fn validate(cfg: &Config) -> Result<ValidationReport, CliError> {
    run_validate(cfg)
}

pub fn dump_config(cfg: &Config) -> String {
    cfg.to_toml()
}
