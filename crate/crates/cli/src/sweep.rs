//! Parameter sweeps: optimize each bound at every point of one axis.

use std::fmt;
use std::str::FromStr;

use ehcr_core::{maximize, BoundMode, OptimOptions, OptimResult, ScenarioParams};
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{fmt_num, optim_header, optim_row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    LambdaP,
    LambdaE,
    Q,
    DMax,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::LambdaP => "lambda_p",
            Axis::LambdaE => "lambda_e",
            Axis::Q => "q",
            Axis::DMax => "D_max",
        }
    }

    pub fn apply(self, params: &ScenarioParams, value: f64) -> ScenarioParams {
        let mut p = *params;
        match self {
            Axis::LambdaP => p.lambda_p = value,
            Axis::LambdaE => p.lambda_e = value,
            Axis::Q => p.q = value,
            Axis::DMax => p.d_max = value,
        }
        p
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lambda_p" => Ok(Axis::LambdaP),
            "lambda_e" => Ok(Axis::LambdaE),
            "q" => Ok(Axis::Q),
            "D_max" => Ok(Axis::DMax),
            other => Err(format!(
                "unknown sweep axis `{other}` (expected lambda_p, lambda_e, q or D_max)"
            )),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub modes: Vec<BoundMode>,
    pub fixed: ScenarioParams,
    pub optim: OptimOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Config("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1]) {
            return Err(CliError::Config("sweep values must be strictly increasing".into()));
        }
        if self.modes.is_empty() {
            return Err(CliError::Config("sweep needs at least one mode".into()));
        }
        for &v in &self.values {
            self.axis
                .apply(&self.fixed, v)
                .validate()
                .map_err(|e| CliError::Config(format!("{} = {v}: {e}", self.axis)))?;
        }
        self.optim.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: OptimResult,
}

/// Optimize every (value, mode) pair. Points run in parallel; rows come back
/// in axis order, modes in the order given.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    spec.validate()?;
    let jobs: Vec<(f64, BoundMode)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.modes.iter().map(move |&m| (v, m)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(value, mode)| SweepRow {
            value,
            result: maximize(&spec.axis.apply(&spec.fixed, value), mode, &spec.optim),
        })
        .collect())
}

pub fn sweep_header() -> Vec<String> {
    let mut h = vec!["axis".to_string(), "value".to_string()];
    h.extend(optim_header());
    h
}

pub fn sweep_rows(axis: Axis, rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut cells = vec![axis.name().to_string(), fmt_num(r.value)];
            cells.extend(optim_row(&r.result));
            cells
        })
        .collect()
}

/// Parse a comma-separated list of numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad sweep value `{}`: {e}", s.trim())))
        })
        .collect()
}
