//! Constrained maximization of a secondary-throughput bound over the eight
//! policy variables.
//!
//! The search runs on the unit box (powers scaled by `P_max`). Each restart
//! is a Nelder-Mead descent on `-mu_s` plus an exterior quadratic penalty for
//! the stability and delay constraints, followed by a repair step that pulls
//! the access probabilities back until both constraints hold strictly. Every
//! primary-side success probability is affine in a common scaling of the
//! access probabilities, so the repair is an exact bisection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::BoundMode;
use crate::error::ModelError;
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::params::{Policy, ScenarioParams};
use crate::queueing::{service_prob, STABILITY_MARGIN};
use crate::throughput::{bound_availability, bound_success_rates, throughput_bound, PowerPairing, ThroughputReport};

/// Restarts whose start points form one Latin hypercube.
pub const LHS_BLOCK: usize = 16;
/// Points in the fallback feasibility sweep.
pub const FEASIBILITY_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub restarts: usize,
    /// Simplex iterations per descent.
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Constrain `ps3 <= ps2 <= ps1`.
    pub enforce_power_order: bool,
    pub eq6_literal: bool,
    pub penalty_weight: f64,
    /// Fix all three powers at `P_max` and optimize only the probabilities.
    pub pin_powers: bool,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 3000,
            tol: 1e-9,
            seed: 1,
            enforce_power_order: false,
            eq6_literal: false,
            penalty_weight: 1e3,
            pin_powers: false,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.restarts == 0 {
            return Err(ModelError::InvalidParameter {
                name: "restarts",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "tol",
                value: self.tol,
                reason: "must be positive",
            });
        }
        if self.penalty_weight.is_nan() || self.penalty_weight <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "penalty_weight",
                value: self.penalty_weight,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    pub fn pairing(&self) -> PowerPairing {
        PowerPairing::from_literal_flag(self.eq6_literal)
    }
}

/// Outcome of evaluating one policy against the constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: ThroughputReport,
    pub stable: bool,
    pub feasible: bool,
}

impl Evaluation {
    pub fn mu_s(&self) -> f64 {
        self.report.mu_s
    }
}

/// Evaluate `policy` under `mode`. An unstable primary queue yields
/// `mu_s = 0`, `pi0 = 0` and infinite delay.
pub fn evaluate(params: &ScenarioParams, policy: &Policy, mode: BoundMode, pairing: PowerPairing) -> Evaluation {
    match throughput_bound(params, policy, mode, pairing) {
        Ok(report) => Evaluation {
            feasible: report.d_p <= params.d_max,
            stable: true,
            report,
        },
        Err(ModelError::UnstableQueue { eta, .. }) => {
            let (first_tx, retx) = bound_success_rates(mode, params, policy);
            Evaluation {
                report: ThroughputReport {
                    mu_s: 0.0,
                    eta,
                    pi0: 0.0,
                    pavail: bound_availability(mode, params, policy),
                    d_p: f64::INFINITY,
                    first_tx,
                    retx,
                    mode,
                },
                stable: false,
                feasible: false,
            }
        }
        Err(e) => panic!("policy evaluation failed on validated inputs: {e}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_policy: Policy,
    pub report: ThroughputReport,
    pub feasible: bool,
    /// Restarts whose descent converged and ended feasible.
    pub restarts_converged: usize,
    /// Final penalized objective of each restart, in restart order.
    pub objective_history: Vec<f64>,
}

/// Maps unit-box coordinates to policies.
#[derive(Debug, Clone, Copy)]
struct Decoder {
    p_max: f64,
    ordered: bool,
    pinned: bool,
}

impl Decoder {
    fn decode(&self, x: &[f64]) -> Policy {
        let (ps1, ps2, ps3) = if self.pinned {
            (self.p_max, self.p_max, self.p_max)
        } else if self.ordered {
            let ps1 = x[5] * self.p_max;
            let ps2 = x[6] * ps1;
            (ps1, ps2, x[7] * ps2)
        } else {
            (x[5] * self.p_max, x[6] * self.p_max, x[7] * self.p_max)
        };
        Policy {
            alpha_s: x[0],
            alpha_f: x[1],
            alpha_t: x[2],
            alpha_b: x[3],
            alpha_r: x[4],
            ps1,
            ps2,
            ps3,
        }
    }
}

struct Problem<'a> {
    params: &'a ScenarioParams,
    mode: BoundMode,
    pairing: PowerPairing,
    decoder: Decoder,
    weight: f64,
}

impl Problem<'_> {
    fn evaluate(&self, policy: &Policy) -> Evaluation {
        evaluate(self.params, policy, self.mode, self.pairing)
    }

    /// `-mu_s` plus penalty. The delay violation is measured as
    /// `(D - D_max) / D`, which tends to 1 at the stability boundary where the
    /// instability penalty takes over, keeping the landscape continuous.
    fn objective(&self, x: &[f64]) -> f64 {
        let policy = self.decoder.decode(x);
        let ev = self.evaluate(&policy);
        if !ev.stable {
            let lambda_p = self.params.lambda_p;
            let violation = lambda_p - (ev.report.eta - STABILITY_MARGIN);
            return self.weight * (1.0 + 10.0 * violation.max(0.0)).powi(2);
        }
        let d = ev.report.d_p;
        let d_max = self.params.d_max;
        let delay_violation = if d > d_max { (d - d_max) / d } else { 0.0 };
        -ev.report.mu_s + self.weight * delay_violation.powi(2)
    }

    fn is_feasible(&self, policy: &Policy) -> bool {
        self.evaluate(policy).feasible
    }

    /// Largest access scaling in `[0, 1]` that is feasible, or `None` when
    /// even a silent SU violates the constraints.
    fn repair(&self, policy: &Policy) -> Option<Policy> {
        if self.is_feasible(policy) {
            return Some(*policy);
        }
        let silent = policy.scale_access(0.0);
        if !self.is_feasible(&silent) {
            return None;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.is_feasible(&policy.scale_access(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(policy.scale_access(lo))
    }

    fn descend(&self, x0: &[f64], max_iters: usize, tol: f64) -> (Vec<f64>, f64, bool) {
        let opts = NelderMeadOptions {
            max_iters,
            f_tol: tol,
            ..Default::default()
        };
        let f = |x: &[f64]| self.objective(x);
        let res = nelder_mead::minimize(f, x0, &opts);
        (res.x, res.f, res.converged)
    }
}

/// Latin hypercube design of `n` points in `[0, 1]^dim`.
pub fn latin_hypercube<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            point[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Start point of restart `index`. Restarts are grouped in blocks of
/// [`LHS_BLOCK`], each block an independent Latin hypercube drawn from its own
/// stream, so the first `n` start points do not depend on the restart count.
fn start_point(seed: u64, index: usize) -> Vec<f64> {
    let block = index / LHS_BLOCK;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64 + 1);
    let mut design = latin_hypercube(LHS_BLOCK, Policy::DIM, &mut rng);
    design.swap_remove(index % LHS_BLOCK)
}

struct RestartOutcome {
    policy: Option<Policy>,
    mu_s: f64,
    objective: f64,
    converged: bool,
}

/// Maximize the `mode` throughput bound subject to primary stability and the
/// delay cap. Deterministic for a given `opts.seed` and restart count,
/// regardless of thread count.
pub fn maximize(params: &ScenarioParams, mode: BoundMode, opts: &OptimOptions) -> OptimResult {
    let problem = Problem {
        params,
        mode,
        pairing: opts.pairing(),
        decoder: Decoder {
            p_max: params.p_max,
            ordered: opts.enforce_power_order,
            pinned: opts.pin_powers,
        },
        weight: opts.penalty_weight,
    };

    let outcomes: Vec<RestartOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = start_point(opts.seed, i);
            let (x, objective, converged) = problem.descend(&x0, opts.max_iters, opts.tol);
            let policy = problem.repair(&problem.decoder.decode(&x));
            let mu_s = policy.map_or(0.0, |p| problem.evaluate(&p).mu_s());
            RestartOutcome {
                policy,
                mu_s,
                objective,
                converged,
            }
        })
        .collect();

    let objective_history = outcomes.iter().map(|o| o.objective).collect();
    let restarts_converged = outcomes
        .iter()
        .filter(|o| o.converged && o.policy.is_some())
        .count();

    let mut best: Option<(Policy, f64)> = None;
    for o in &outcomes {
        if let Some(p) = o.policy {
            // Earlier restarts win ties within tolerance.
            if best.is_none_or(|(_, mu)| o.mu_s > mu + opts.tol) {
                best = Some((p, o.mu_s));
            }
        }
    }

    // The sweep competes last so that adding restarts never lowers the result.
    if let Some((p, mu)) = feasibility_sweep(&problem, opts) {
        if best.is_none_or(|(_, b)| mu > b + opts.tol) {
            best = Some((p, mu));
        }
    }

    match best {
        Some((policy, _)) => {
            let ev = problem.evaluate(&policy);
            debug_assert!(ev.feasible);
            OptimResult {
                best_policy: policy,
                report: ev.report,
                feasible: true,
                restarts_converged,
                objective_history,
            }
        }
        None => {
            let silent = Policy::silent();
            let mut report = problem.evaluate(&silent).report;
            report.mu_s = 0.0;
            OptimResult {
                best_policy: silent,
                report,
                feasible: false,
                restarts_converged,
                objective_history,
            }
        }
    }
}

/// Space-filling search for any feasible point, polished by one descent.
fn feasibility_sweep(problem: &Problem<'_>, opts: &OptimOptions) -> Option<(Policy, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(0);
    let design = latin_hypercube(FEASIBILITY_SWEEP_POINTS, Policy::DIM, &mut rng);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x in design {
        let ev = problem.evaluate(&problem.decoder.decode(&x));
        if ev.feasible && best.as_ref().is_none_or(|(_, mu)| ev.mu_s() > *mu) {
            best = Some((x, ev.mu_s()));
        }
    }
    let (x0, mu0) = best?;
    let (x, _, _) = problem.descend(&x0, opts.max_iters, opts.tol);
    let polished = problem.repair(&problem.decoder.decode(&x))?;
    let mu = problem.evaluate(&polished).mu_s();
    if mu >= mu0 {
        Some((polished, mu))
    } else {
        Some((problem.decoder.decode(&x0), mu0))
    }
}

/// Primary service probability of the most PU-friendly policy under `mode`.
/// No policy is feasible when this does not exceed `lambda_p`.
pub fn best_case_service(params: &ScenarioParams, mode: BoundMode) -> f64 {
    let (first_tx, retx) = bound_success_rates(mode, params, &Policy::silent());
    service_prob(params.lambda_p, first_tx, retx)
}
