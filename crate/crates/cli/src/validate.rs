//! Oracle suite run by `ehcr validate`: Monte Carlo and simulation estimates
//! checked against the analytical model, with verdicts that account for
//! sampling error.

use std::fmt;

use ehcr_core::channel::{success_prob, TxDuration};
use ehcr_core::energy::energy_service_rate;
use ehcr_core::queueing::{first_tx_success, retx_success, SteadyState};
use ehcr_core::simulator::{simulate, simulate_primary_chain, ForceAvailability, SimConfig};
use ehcr_core::throughput::secondary_throughput;
use ehcr_core::{evaluate, BoundMode, ScenarioParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::config::Config;
use crate::error::CliError;
use crate::output::fmt_num;

/// Width of the confidence band, in standard errors.
pub const Z: f64 = 3.0;
/// Allowance for the coupled system straying outside the decoupled bounds.
pub const BOUND_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The confidence band is wider than the check can usefully resolve.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// One estimate compared against an expected interval `[lo, hi]`, widened by
/// `Z * se + slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub se: f64,
    pub slack: f64,
    /// Largest `Z * se` at which the check is still meaningful.
    pub resolution: f64,
    pub samples: u64,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(name: impl Into<String>, estimate: f64, expected: (f64, f64), se: f64, slack: f64, resolution: f64, samples: u64) -> Self {
        let (lo, hi) = expected;
        let band = Z * se;
        let verdict = if band.is_nan() || band > resolution {
            Verdict::Inconclusive
        } else if estimate >= lo - band - slack && estimate <= hi + band + slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            estimate,
            lo,
            hi,
            se,
            slack,
            resolution,
            samples,
            verdict,
        }
    }

    /// An exact check with no sampling error.
    pub fn exact(name: impl Into<String>, estimate: f64, expected: f64) -> Self {
        Self::new(name, estimate, (expected, expected), 0.0, 0.0, 0.0, 1)
    }

    /// Distance from the widened band; zero inside it.
    pub fn excursion(&self) -> f64 {
        let band = Z * self.se + self.slack;
        (self.lo - band - self.estimate).max(self.estimate - self.hi - band).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail).count()
    }

    pub fn inconclusive(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == Verdict::Inconclusive).count()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<44} {:>15} {:>31} {:>13} {:>8} {:>10} {:>10}  verdict\n",
            "check", "estimate", "expected", "3*se", "slack", "resolution", "samples"
        );
        for c in &self.checks {
            let expected = if c.lo == c.hi {
                fmt_num(c.lo)
            } else {
                format!("[{}, {}]", fmt_num(c.lo), fmt_num(c.hi))
            };
            out.push_str(&format!(
                "{:<44} {:>15} {:>31} {:>13} {:>8} {:>10} {:>10}  {}",
                c.name,
                fmt_num(c.estimate),
                expected,
                fmt_num(Z * c.se),
                fmt_num(c.slack),
                fmt_num(c.resolution),
                c.samples,
                c.verdict
            ));
            if c.verdict == Verdict::Fail {
                out.push_str(&format!(" (off by {})", fmt_num(c.excursion())));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "{} checks: {} failed, {} inconclusive\n",
            self.checks.len(),
            self.failures(),
            self.inconclusive()
        ));
        out
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte Carlo non-outage estimate for a link with one interferer.
pub fn channel_monte_carlo(params: &ScenarioParams, kind: TxDuration, signal: (f64, f64), interferer: (f64, f64), draws: u64, seed: u64) -> f64 {
    let radio = &params.radio;
    let rate = radio.payload_bits / radio.airtime(kind);
    let noise = radio.noise_psd * radio.bandwidth;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0u64;
    for _ in 0..draws {
        let h: f64 = rng.sample(Exp1);
        let g: f64 = rng.sample(Exp1);
        let sinr = signal.0 * h * signal.1 / (noise + interferer.0 * g * interferer.1);
        ok += (radio.bandwidth * (1.0 + sinr).log2() > rate) as u64;
    }
    ok as f64 / draws as f64
}

fn channel_checks(params: &ScenarioParams, draws: u64, seed: u64) -> Vec<Check> {
    let l = params.links;
    let (pu, pmax) = (params.p_primary, params.p_max);
    let cases = [
        ("PU link, SU silent", TxDuration::FullSlot, (pu, l.p_to_dp), (0.0, l.s_to_dp)),
        ("PU link, SU at P_max", TxDuration::FullSlot, (pu, l.p_to_dp), (pmax, l.s_to_dp)),
        ("SU full slot, PU idle", TxDuration::FullSlot, (pmax, l.s_to_ds), (0.0, l.p_to_ds)),
        ("SU full slot, PU busy", TxDuration::FullSlot, (pmax, l.s_to_ds), (pu, l.p_to_ds)),
        ("SU post-sensing, PU idle", TxDuration::PostSensing, (pmax, l.s_to_ds), (0.0, l.p_to_ds)),
        ("SU post-sensing, PU busy", TxDuration::PostSensing, (pmax, l.s_to_ds), (pu, l.p_to_ds)),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(i, &(name, kind, sig, int))| {
            let exact = success_prob(kind, sig.0, int.0, sig.1, int.1, &params.radio);
            let est = channel_monte_carlo(params, kind, sig, int, draws, seed.wrapping_add(i as u64));
            Check::new(format!("channel: {name}"), est, (exact, exact), binomial_se(exact, draws), 0.0, 0.01, draws)
        })
        .collect()
}

/// Run every oracle check for the configured scenario and policy.
pub fn run_validate(cfg: &Config) -> Result<ValidationReport, CliError> {
    let params = cfg.scenario();
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let policy = cfg.policy();
    let pairing = cfg.optim().pairing();
    let n = cfg.slots;
    let seed = cfg.seed;
    let mut checks = channel_checks(&params, n, seed);

    // Primary chain alone, served as under the lower bound when that is stable.
    let lower = evaluate(&params, &policy, BoundMode::LowerThroughput, pairing);
    let quiet = params.pu_alone();
    let (om, ga) = if lower.stable {
        (lower.report.first_tx, lower.report.retx)
    } else {
        (quiet, quiet)
    };
    let ss = SteadyState::solve(params.lambda_p, om, ga).map_err(|e| CliError::Config(e.to_string()))?;
    let chain = simulate_primary_chain(params.lambda_p, om, ga, n, seed);
    checks.push(Check::new("chain: empty-queue probability", chain.pi0_hat, (ss.pi0, ss.pi0), chain.se_pi0, 0.0, 0.01, n));
    let d = ss.mean_delay();
    checks.push(Check::new("chain: mean delay", chain.d_p_hat, (d, d), chain.se_d_p, 0.0, 0.02 * d, n));

    let sim_cfg = |force| SimConfig {
        force_availability: force,
        ..cfg.sim()
    };

    // Energy always available: throughput and drain against the exact chain.
    if lower.stable {
        let ss1 = SteadyState::solve(
            params.lambda_p,
            first_tx_success(&params, &policy, 1.0),
            retx_success(&params, &policy, 1.0),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let r = simulate(&params, &policy, &sim_cfg(ForceAvailability::Always)).map_err(|e| CliError::Config(e.to_string()))?;
        let mu = secondary_throughput(&params, &policy, 1.0, &ss1, pairing);
        let me = energy_service_rate(&params, &policy, &ss1);
        let m = r.slots_measured;
        checks.push(Check::new("powered SU: throughput", r.mu_s_hat, (mu, mu), r.se.mu_s, 0.0, 0.01, m));
        checks.push(Check::new("powered SU: energy drain", r.mu_e_hat, (me, me), r.se.mu_e, 0.0, 0.01 * me.max(1.0), m));
        checks.push(Check::new("powered SU: empty-queue probability", r.pi0_hat, (ss1.pi0, ss1.pi0), r.se.pi0, 0.0, 0.01, m));
    }

    // Coupled system against the two bounds.
    let r = simulate(&params, &policy, &cfg.sim()).map_err(|e| CliError::Config(e.to_string()))?;
    let upper = evaluate(&params, &policy, BoundMode::UpperThroughput, pairing);
    let lo = if lower.stable { lower.mu_s() } else { 0.0 };
    let hi = upper.mu_s().max(lo);
    checks.push(Check::new(
        format!("simulation ({}): throughput in bounds", fmt_force(cfg.force_availability)),
        r.mu_s_hat,
        (lo, hi),
        r.se.mu_s,
        BOUND_SLACK,
        0.01,
        r.slots_measured,
    ));

    let l = r.ledger;
    checks.push(Check::exact(
        "ledger: packets conserved",
        (l.pu_arrivals as i128 - l.pu_departures as i128 - l.final_queue_p as i128) as f64,
        0.0,
    ));
    checks.push(Check::exact(
        "ledger: energy conserved",
        (l.energy_arrived as i128 - l.energy_drained as i128 - l.final_battery as i128) as f64,
        0.0,
    ));
    checks.push(Check::new(
        "ledger: departures per slot",
        l.max_departures_per_slot as f64,
        (0.0, 1.0),
        0.0,
        0.0,
        0.0,
        1,
    ));

    Ok(ValidationReport { checks })
}

fn fmt_force(f: ForceAvailability) -> &'static str {
    match f {
        ForceAvailability::Off => "battery",
        ForceAvailability::Always => "always powered",
        ForceAvailability::Never => "never powered",
    }
}
