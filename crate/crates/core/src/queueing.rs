//! Primary queue: per-slot service probabilities and the closed-form steady
//! state of its first-transmission / retransmission Markov chain.
//!
//! The chain has states `0` (empty), `(k, F)` (k packets, head packet on its
//! first attempt) and `(k, R)` (k packets, head packet being retransmitted).
//! `F` states are served with probability Ω_p, `R` states with Γ_p; a failure
//! moves the chain to `R` at the same occupancy, and Bernoulli(λ_p) arrivals
//! join at the end of the slot.

use serde::{Deserialize, Serialize};

use crate::channel::TxDuration;
use crate::error::{ModelError, Result};
use crate::params::{Policy, ScenarioParams};

/// Slack applied to the strict stability inequality λ_p < η.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// PU success probabilities for one policy and energy-availability level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRates {
    /// First-attempt success with the SU always energized (γ).
    pub energized: f64,
    /// First-attempt success (Ω_p).
    pub first_tx: f64,
    /// Retransmission success (Γ_p).
    pub retx: f64,
}

/// PU success on a first attempt assuming the SU has energy for any
/// transmission it decides on. Mixes the unsensed, missed-detection and
/// detected branches of the access protocol.
pub fn energized_success(params: &ScenarioParams, policy: &Policy) -> f64 {
    let pu = |ps: f64| params.pu_success(TxDuration::FullSlot, ps);
    let quiet = pu(0.0);
    let with_ps1 = pu(policy.ps1);
    let with_ps2 = pu(policy.ps2);
    let mix = |a: f64, busy: f64| a * busy + (1.0 - a) * quiet;

    let pmd = params.p_miss_detect;
    (1.0 - policy.alpha_s) * mix(policy.alpha_t, with_ps1)
        + policy.alpha_s * pmd * mix(policy.alpha_f, with_ps1)
        + policy.alpha_s * (1.0 - pmd) * mix(policy.alpha_b, with_ps2)
}

/// Ω_p: first-attempt success when the SU has energy with probability `pavail`.
pub fn first_tx_success(params: &ScenarioParams, policy: &Policy, pavail: f64) -> f64 {
    pavail * energized_success(params, policy) + (1.0 - pavail) * params.pu_alone()
}

/// Γ_p: retransmission success. With probability `q` the SU heard the NACK
/// and accesses with `alpha_r` at `ps3`; otherwise it behaves as on a first
/// attempt.
pub fn retx_success(params: &ScenarioParams, policy: &Policy, pavail: f64) -> f64 {
    let quiet = params.pu_alone();
    let after_nack = policy.alpha_r * params.pu_success(TxDuration::FullSlot, policy.ps3)
        + (1.0 - policy.alpha_r) * quiet;
    let q = params.q;
    pavail * (q * after_nack + (1.0 - q) * energized_success(params, policy))
        + (1.0 - pavail) * quiet
}

pub fn success_rates(params: &ScenarioParams, policy: &Policy, pavail: f64) -> SuccessRates {
    SuccessRates {
        energized: energized_success(params, policy),
        first_tx: first_tx_success(params, policy, pavail),
        retx: retx_success(params, policy, pavail),
    }
}

/// Aggregate service probability η = λ_p Ω_p + (1 − λ_p) Γ_p.
pub fn service_prob(lambda_p: f64, first_tx: f64, retx: f64) -> f64 {
    lambda_p * first_tx + (1.0 - lambda_p) * retx
}

/// Stationary distribution of the primary queue chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub eta: f64,
    pub pi0: f64,
    pub lambda_p: f64,
    pub first_tx: f64,
    pub retx: f64,
}

impl SteadyState {
    /// Solve the chain for arrival probability `lambda_p` and service
    /// probabilities `first_tx` (Ω_p), `retx` (Γ_p).
    ///
    /// Fails with [`ModelError::UnstableQueue`] unless λ_p ≤ η − 1e-9.
    pub fn solve(lambda_p: f64, first_tx: f64, retx: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda_p", lambda_p),
            ("omega_p", first_tx),
            ("gamma_p", retx),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: v,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        if lambda_p == 0.0 || lambda_p == 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "lambda_p",
                value: lambda_p,
                reason: "must lie in (0, 1)",
            });
        }
        let eta = service_prob(lambda_p, first_tx, retx);
        if lambda_p > eta - STABILITY_MARGIN {
            return Err(ModelError::UnstableQueue { lambda_p, eta });
        }
        Ok(Self {
            eta,
            pi0: (eta - lambda_p) / retx,
            lambda_p,
            first_tx,
            retx,
        })
    }

    /// Common ratio λ_p(1 − η) / ((1 − λ_p) η) of the k ≥ 2 tails.
    pub fn ratio(&self) -> f64 {
        self.lambda_p * (1.0 - self.eta) / ((1.0 - self.lambda_p) * self.eta)
    }

    /// Shared prefactor π₀ (1 − Ω_p) / (1 − η)² of the k ≥ 2 tails, zero when
    /// first attempts never fail.
    fn tail_scale(&self) -> f64 {
        if self.first_tx == 1.0 {
            0.0
        } else {
            self.pi0 * (1.0 - self.first_tx) / (1.0 - self.eta).powi(2)
        }
    }

    /// Probability of `k` packets with the head packet on its first attempt.
    pub fn pi(&self, k: u32) -> f64 {
        let l = self.lambda_p;
        match k {
            0 => self.pi0,
            1 => self.pi0 * l / (1.0 - l) * (l + (1.0 - l) * self.retx) / self.eta,
            _ => self.tail_scale() * l * self.ratio().powi(k as i32),
        }
    }

    /// Probability of `k` packets with the head packet being retransmitted.
    pub fn chi(&self, k: u32) -> f64 {
        let l = self.lambda_p;
        match k {
            0 => 0.0,
            1 => self.pi0 * l / self.eta * (1.0 - self.first_tx),
            _ => self.tail_scale() * (1.0 - l) * self.ratio().powi(k as i32),
        }
    }

    /// Σ_{k≥1} π_k; each packet spends exactly one slot on its first attempt.
    pub fn busy_first_mass(&self) -> f64 {
        self.lambda_p
    }

    /// Σ_{k≥1} χ_k.
    pub fn busy_retx_mass(&self) -> f64 {
        self.lambda_p * (1.0 - self.first_tx) / self.retx
    }

    /// Smallest `K` such that the tail Σ_{k>K} k (π_k + χ_k) is below `eps`.
    pub fn truncation_point(&self, eps: f64) -> u32 {
        let r = self.ratio();
        let scale = self.tail_scale();
        if r == 0.0 || scale == 0.0 {
            return 2;
        }
        // Σ_{k>K} k r^k ≤ (K+1) r^{K+1} / (1 − r)²
        let mut k = 2u32;
        while scale * (k as f64 + 1.0) * r.powi(k as i32 + 1) / (1.0 - r).powi(2) > eps {
            k += 1;
        }
        k
    }

    /// Mean delay by direct summation of (1/λ_p) Σ k (π_k + χ_k).
    pub fn delay_by_summation(&self, eps: f64) -> f64 {
        let kmax = self.truncation_point(eps);
        let total: f64 = (1..=kmax)
            .map(|k| k as f64 * (self.pi(k) + self.chi(k)))
            .sum();
        total / self.lambda_p
    }

    /// Average primary packet delay in slots (Little's law on the chain).
    ///
    /// With equal service probabilities this is the Geo/Geo/1 value
    /// `(1 − λ_p) / (μ − λ_p)`, returned in that form.
    pub fn mean_delay(&self) -> f64 {
        let (l, eta, om, ga) = (self.lambda_p, self.eta, self.first_tx, self.retx);
        if om == ga {
            return (1.0 - l) / (ga - l);
        }
        let den = (eta - l) * (1.0 - l) * (1.0 - eta) * ga;
        if den <= 0.0 || 1.0 - eta < 1e-12 {
            return self.delay_by_summation(1e-14);
        }
        ((om - eta) * (eta - l).powi(2) + (1.0 - l).powi(2) * (1.0 - om) * eta) / den
    }
}
