//! Flat TOML configuration. Every key is optional; missing keys take the
//! reference scenario values with a silent secondary policy.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ehcr_core::simulator::{ForceAvailability, SimConfig};
use ehcr_core::{BoundMode, LinkVariances, OptimOptions, Policy, RadioConstants, ScenarioParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which bounds a command evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Lower,
    Upper,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> &'static [BoundMode] {
        match self {
            ModeSelection::Lower => &[BoundMode::LowerThroughput],
            ModeSelection::Upper => &[BoundMode::UpperThroughput],
            ModeSelection::Both => &BoundMode::ALL,
        }
    }
}

impl FromStr for ModeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower" => Ok(ModeSelection::Lower),
            "upper" => Ok(ModeSelection::Upper),
            "both" => Ok(ModeSelection::Both),
            other => Err(format!("unknown mode `{other}` (expected lower, upper or both)")),
        }
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeSelection::Lower => "lower",
            ModeSelection::Upper => "upper",
            ModeSelection::Both => "both",
        })
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub lambda_p: f64,
    pub lambda_e: f64,
    pub q: f64,
    pub P_p: f64,
    pub P_MD: f64,
    pub P_FA: f64,
    pub P_max: f64,
    pub D_max: f64,

    pub beta: f64,
    pub T: f64,
    pub tau: f64,
    pub W: f64,
    pub N0: f64,

    pub var_p_dp: f64,
    pub var_s_dp: f64,
    pub var_p_ds: f64,
    pub var_s_ds: f64,

    pub alpha_s: f64,
    pub alpha_f: f64,
    pub alpha_t: f64,
    pub alpha_b: f64,
    pub alpha_r: f64,
    pub Ps1: f64,
    pub Ps2: f64,
    pub Ps3: f64,

    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub enforce_power_order: bool,
    pub eq6_literal: bool,
    pub penalty_weight: f64,
    pub pin_powers: bool,

    pub slots: u64,
    pub warmup: u64,
    pub force_availability: ForceAvailability,

    pub mode: ModeSelection,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_parts(
            &ScenarioParams::reference(),
            &Policy::silent(),
            &OptimOptions::default(),
            &SimConfig::default(),
            ModeSelection::Both,
        )
    }
}

impl Config {
    pub fn from_parts(
        params: &ScenarioParams,
        policy: &Policy,
        optim: &OptimOptions,
        sim: &SimConfig,
        mode: ModeSelection,
    ) -> Self {
        let r = &params.radio;
        let l = &params.links;
        Self {
            lambda_p: params.lambda_p,
            lambda_e: params.lambda_e,
            q: params.q,
            P_p: params.p_primary,
            P_MD: params.p_miss_detect,
            P_FA: params.p_false_alarm,
            P_max: params.p_max,
            D_max: params.d_max,
            beta: r.payload_bits,
            T: r.slot_duration,
            tau: r.sensing_duration,
            W: r.bandwidth,
            N0: r.noise_psd,
            var_p_dp: l.p_to_dp,
            var_s_dp: l.s_to_dp,
            var_p_ds: l.p_to_ds,
            var_s_ds: l.s_to_ds,
            alpha_s: policy.alpha_s,
            alpha_f: policy.alpha_f,
            alpha_t: policy.alpha_t,
            alpha_b: policy.alpha_b,
            alpha_r: policy.alpha_r,
            Ps1: policy.ps1,
            Ps2: policy.ps2,
            Ps3: policy.ps3,
            restarts: optim.restarts,
            max_iters: optim.max_iters,
            tol: optim.tol,
            seed: optim.seed,
            enforce_power_order: optim.enforce_power_order,
            eq6_literal: optim.eq6_literal,
            penalty_weight: optim.penalty_weight,
            pin_powers: optim.pin_powers,
            slots: sim.slots,
            warmup: sim.warmup,
            force_availability: sim.force_availability,
            mode,
        }
    }

    /// Parse TOML text. Diagnostics carry the offending key and position.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Check every section. `lambda_p = 0` is accepted here; commands that
    /// need a steady state reject it themselves.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg_err = |e: ehcr_core::ModelError| CliError::Config(e.to_string());
        self.scenario().validate_for_simulation().map_err(cfg_err)?;
        self.policy().validate(self.P_max).map_err(cfg_err)?;
        self.optim().validate().map_err(cfg_err)?;
        self.sim().validate().map_err(cfg_err)?;
        Ok(())
    }

    pub fn scenario(&self) -> ScenarioParams {
        ScenarioParams {
            lambda_p: self.lambda_p,
            lambda_e: self.lambda_e,
            q: self.q,
            p_primary: self.P_p,
            p_miss_detect: self.P_MD,
            p_false_alarm: self.P_FA,
            p_max: self.P_max,
            d_max: self.D_max,
            radio: RadioConstants {
                payload_bits: self.beta,
                slot_duration: self.T,
                sensing_duration: self.tau,
                bandwidth: self.W,
                noise_psd: self.N0,
            },
            links: LinkVariances {
                p_to_dp: self.var_p_dp,
                s_to_dp: self.var_s_dp,
                p_to_ds: self.var_p_ds,
                s_to_ds: self.var_s_ds,
            },
        }
    }

    pub fn policy(&self) -> Policy {
        Policy {
            alpha_s: self.alpha_s,
            alpha_f: self.alpha_f,
            alpha_t: self.alpha_t,
            alpha_b: self.alpha_b,
            alpha_r: self.alpha_r,
            ps1: self.Ps1,
            ps2: self.Ps2,
            ps3: self.Ps3,
        }
    }

    pub fn optim(&self) -> OptimOptions {
        OptimOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            enforce_power_order: self.enforce_power_order,
            eq6_literal: self.eq6_literal,
            penalty_weight: self.penalty_weight,
            pin_powers: self.pin_powers,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            slots: self.slots,
            seed: self.seed,
            warmup: self.warmup,
            force_availability: self.force_availability,
        }
    }
}
