//! Secondary battery: availability under the two decoupling assumptions and
//! the mean energy drain per slot.
//!
//! Both bounds treat the battery as an M/D/1 queue fed by Poisson(λ_e) energy
//! units and drained by a fixed amount per transmission, giving
//! `P(available) = min(1, λ_e / drain)`. The lower throughput bound assumes the
//! largest drain (a full-slot transmission at `ps1`); the upper bound assumes
//! the smallest (post-sensing at `ps2` or full-slot at `ps3`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{Policy, ScenarioParams};
use crate::queueing::SteadyState;

/// Which side of the decoupled battery/primary-queue interaction to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundMode {
    /// SU always energized as seen by the PU; battery drained at the largest rate.
    LowerThroughput,
    /// SU invisible to the PU; battery drained at the smallest rate.
    UpperThroughput,
}

impl BoundMode {
    pub const ALL: [BoundMode; 2] = [BoundMode::LowerThroughput, BoundMode::UpperThroughput];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::LowerThroughput => "lower",
            BoundMode::UpperThroughput => "upper",
        }
    }
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lower" => Ok(BoundMode::LowerThroughput),
            "upper" => Ok(BoundMode::UpperThroughput),
            other => Err(format!("unknown bound mode `{other}` (expected lower or upper)")),
        }
    }
}

/// Energy the bound assumes each secondary transmission takes from the battery.
pub fn assumed_drain(mode: BoundMode, params: &ScenarioParams, policy: &Policy) -> f64 {
    let radio = &params.radio;
    match mode {
        BoundMode::LowerThroughput => policy.ps1 * radio.slot_duration,
        BoundMode::UpperThroughput => (policy.ps2 * radio.post_sensing_duration())
            .min(policy.ps3 * radio.slot_duration),
    }
}

/// Probability the battery holds enough energy for one transmission.
pub fn availability_prob(mode: BoundMode, params: &ScenarioParams, policy: &Policy) -> Result<f64> {
    let drain = assumed_drain(mode, params, policy);
    if drain <= 0.0 {
        return Err(ModelError::ZeroDrain);
    }
    Ok((params.lambda_e / drain).min(1.0))
}

/// Mean energy drawn from the battery per slot when every intended
/// transmission is powered, weighted by the primary queue's steady state.
pub fn energy_service_rate(params: &ScenarioParams, policy: &Policy, ss: &SteadyState) -> f64 {
    let t = params.radio.slot_duration;
    let ts = params.radio.post_sensing_duration();
    let (pmd, pfa) = (params.p_miss_detect, params.p_false_alarm);
    let p = policy;

    let unsensed = (1.0 - p.alpha_s) * p.alpha_t * p.ps1 * t;
    let idle = unsensed
        + p.alpha_s * (p.alpha_f * (1.0 - pfa) * p.ps1 + p.alpha_b * pfa * p.ps2) * ts;
    let busy = unsensed
        + p.alpha_s * (p.alpha_f * pmd * p.ps1 + p.alpha_b * (1.0 - pmd) * p.ps2) * ts;
    let retx = params.q * p.alpha_r * p.ps3 * t + (1.0 - params.q) * busy;

    ss.pi0 * idle + ss.busy_first_mass() * busy + ss.busy_retx_mass() * retx
}
