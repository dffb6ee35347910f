//! Secondary throughput and its lower/upper bounds.

use serde::{Deserialize, Serialize};

use crate::channel::TxDuration;
use crate::energy::{assumed_drain, availability_prob, BoundMode};
use crate::error::{ModelError, Result};
use crate::params::{Policy, ScenarioParams};
use crate::queueing::{first_tx_success, retx_success, SteadyState};

/// Which secondary power serves which access branch in the throughput sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerPairing {
    /// Busy-sensed access uses `ps2`, post-NACK access uses `ps3`, matching the
    /// protocol and the PU-side formulas.
    #[default]
    Protocol,
    /// Busy-sensed access uses `ps3` and post-NACK access uses `ps2`, the
    /// pairing of the throughput expression as originally typeset.
    Literal,
}

impl PowerPairing {
    pub fn from_literal_flag(literal: bool) -> Self {
        if literal {
            PowerPairing::Literal
        } else {
            PowerPairing::Protocol
        }
    }

    /// `(busy-sensed power, post-NACK power)`.
    fn powers(self, policy: &Policy) -> (f64, f64) {
        match self {
            PowerPairing::Protocol => (policy.ps2, policy.ps3),
            PowerPairing::Literal => (policy.ps3, policy.ps2),
        }
    }
}

/// Per-state SU success contributions before scaling by energy availability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSuccess {
    /// PU queue empty.
    pub idle: f64,
    /// PU on a first attempt.
    pub first: f64,
    /// PU retransmitting.
    pub retx: f64,
}

pub fn branch_success(params: &ScenarioParams, policy: &Policy, pairing: PowerPairing) -> BranchSuccess {
    use TxDuration::{FullSlot, PostSensing};

    let p = policy;
    let pu = params.p_primary;
    let (pmd, pfa) = (params.p_miss_detect, params.p_false_alarm);
    let (busy_power, nack_power) = pairing.powers(p);

    let idle = (1.0 - p.alpha_s) * p.alpha_t * params.su_success(FullSlot, p.ps1, 0.0)
        + p.alpha_s
            * (p.alpha_f * (1.0 - pfa) * params.su_success(PostSensing, p.ps1, 0.0)
                + p.alpha_b * pfa * params.su_success(PostSensing, busy_power, 0.0));
    let first = (1.0 - p.alpha_s) * p.alpha_t * params.su_success(FullSlot, p.ps1, pu)
        + p.alpha_s
            * (p.alpha_f * pmd * params.su_success(PostSensing, p.ps1, pu)
                + p.alpha_b * (1.0 - pmd) * params.su_success(PostSensing, busy_power, pu));
    let retx = params.q * p.alpha_r * params.su_success(FullSlot, nack_power, pu)
        + (1.0 - params.q) * first;

    BranchSuccess { idle, first, retx }
}

/// Secondary packets delivered per slot given energy availability `pavail`
/// and the primary queue's steady state.
pub fn secondary_throughput(
    params: &ScenarioParams,
    policy: &Policy,
    pavail: f64,
    ss: &SteadyState,
    pairing: PowerPairing,
) -> f64 {
    let b = branch_success(params, policy, pairing);
    pavail * (ss.pi0 * b.idle + ss.busy_first_mass() * b.first + ss.busy_retx_mass() * b.retx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub mu_s: f64,
    pub eta: f64,
    pub pi0: f64,
    pub pavail: f64,
    pub d_p: f64,
    pub first_tx: f64,
    pub retx: f64,
    pub mode: BoundMode,
}

/// Energy availability used by a bound. A zero assumed drain is resolved to
/// its limit: always available with any harvesting, never without.
pub fn bound_availability(mode: BoundMode, params: &ScenarioParams, policy: &Policy) -> f64 {
    match availability_prob(mode, params, policy) {
        Ok(p) => p,
        Err(ModelError::ZeroDrain) => {
            debug_assert!(assumed_drain(mode, params, policy) <= 0.0);
            if params.lambda_e > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Err(e) => unreachable!("availability_prob only fails on zero drain: {e}"),
    }
}

/// PU success probabilities `(Ω_p, Γ_p)` assumed by a bound.
pub fn bound_success_rates(mode: BoundMode, params: &ScenarioParams, policy: &Policy) -> (f64, f64) {
    // Lower bound: SU always energized (availability 1). Upper: never (0).
    let pavail = match mode {
        BoundMode::LowerThroughput => 1.0,
        BoundMode::UpperThroughput => 0.0,
    };
    (
        first_tx_success(params, policy, pavail),
        retx_success(params, policy, pavail),
    )
}

/// Evaluate one throughput bound for a policy.
///
/// Fails with [`ModelError::UnstableQueue`] when the primary queue has no
/// steady state under the bound's assumptions.
pub fn throughput_bound(
    params: &ScenarioParams,
    policy: &Policy,
    mode: BoundMode,
    pairing: PowerPairing,
) -> Result<ThroughputReport> {
    let (first_tx, retx) = bound_success_rates(mode, params, policy);
    let ss = SteadyState::solve(params.lambda_p, first_tx, retx)?;
    let silent = policy.ps1 == 0.0 && policy.ps2 == 0.0 && policy.ps3 == 0.0;
    let pavail = bound_availability(mode, params, policy);
    let mu_s = if silent {
        0.0
    } else {
        secondary_throughput(params, policy, pavail, &ss, pairing)
    };
    Ok(ThroughputReport {
        mu_s,
        eta: ss.eta,
        pi0: ss.pi0,
        pavail,
        d_p: ss.mean_delay(),
        first_tx,
        retx,
        mode,
    })
}
