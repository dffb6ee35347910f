//! Slot-by-slot Monte Carlo simulation of the primary queue, the secondary
//! battery and the feedback-aware access protocol.
//!
//! Each slot:
//! 1. the PU transmits its head packet at `P_p` if its queue is non-empty;
//! 2. the SU picks an action: if it decoded a NACK in the previous slot it
//!    accesses with `alpha_r` at `ps3`; otherwise it senses with `alpha_s`
//!    (outcome corrupted by miss-detection / false alarm) and accesses with
//!    `alpha_f` at `ps1` or `alpha_b` at `ps2` for the rest of the slot, or
//!    skips sensing and accesses with `alpha_t` at `ps1` for the whole slot;
//! 3. an access needs its full energy in the battery, otherwise it is dropped;
//! 4. fresh exponential channel gains decide both receptions, each decoded
//!    against the other transmission as interference for the whole packet;
//! 5. the SU decodes the primary ACK/NACK with probability `q` (erasure
//!    otherwise, never a flipped bit);
//! 6. departures are removed, then Bernoulli packet and Poisson energy
//!    arrivals are added.
//!
//! Energy is kept in integer nano-joules so the battery ledger balances
//! exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::TxDuration;
use crate::error::{ModelError, Result};
use crate::params::{Policy, ScenarioParams};

/// Batches used for batch-means standard errors.
pub const BATCHES: usize = 50;

const NANO: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceAvailability {
    /// Transmissions draw on the simulated battery.
    #[default]
    Off,
    /// Every intended transmission is powered; the battery is bypassed.
    Always,
    /// Every intended transmission is dropped.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub slots: u64,
    pub seed: u64,
    /// Leading slots excluded from the statistics.
    pub warmup: u64,
    pub force_availability: ForceAvailability,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            slots: 1_000_000,
            seed: 1,
            warmup: 100,
            force_availability: ForceAvailability::Off,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slots <= self.warmup {
            return Err(ModelError::InvalidParameter {
                name: "slots",
                value: self.slots as f64,
                reason: "must exceed warmup",
            });
        }
        Ok(())
    }

    pub fn measured_slots(&self) -> u64 {
        self.slots - self.warmup
    }
}

/// Phase of the primary user at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PuPhase {
    Idle,
    FirstTransmission,
    Retransmission,
}

/// Mutable state carried from one slot to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub queue_p: u64,
    /// Battery content, nano-joules.
    pub battery: u128,
    pub head_failed: bool,
    /// SU decoded a NACK in the previous slot.
    pub heard_nack: bool,
}

impl SimState {
    pub fn phase(&self) -> PuPhase {
        match (self.queue_p, self.head_failed) {
            (0, _) => PuPhase::Idle,
            (_, false) => PuPhase::FirstTransmission,
            (_, true) => PuPhase::Retransmission,
        }
    }

    pub fn battery_joules(&self) -> f64 {
        self.battery as f64 / NANO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StdErrors {
    pub mu_s: f64,
    pub d_p: f64,
    pub pi0: f64,
    pub mu_e: f64,
    pub energy_outage_rate: f64,
}

/// Whole-run conservation counters (warm-up included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub pu_arrivals: u64,
    pub pu_departures: u64,
    pub final_queue_p: u64,
    /// Nano-joules.
    pub energy_arrived: u128,
    pub energy_drained: u128,
    pub final_battery: u128,
    /// Most PU departures observed in a single slot.
    pub max_departures_per_slot: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub slots_measured: u64,
    /// SU packets delivered per slot.
    pub mu_s_hat: f64,
    /// Mean PU occupancy at slot start divided by the measured arrival rate.
    pub d_p_hat: f64,
    pub pi0_hat: f64,
    pub lambda_p_hat: f64,
    /// Energy spent on transmissions per slot, J.
    pub mu_e_hat: f64,
    /// Fraction of intended SU transmissions dropped for lack of energy.
    pub energy_outage_rate: f64,
    pub se: StdErrors,
    pub su_intended: u64,
    pub su_transmissions: u64,
    pub su_successes: u64,
    /// Slots where the SU's NACK belief disagreed with the PU phase.
    pub belief_mismatches: u64,
    /// Slots where the SU believed in a retransmission that was not happening.
    pub false_retx_beliefs: u64,
    pub ledger: Ledger,
}

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    slots: u64,
    successes: u64,
    occupancy: u64,
    empty: u64,
    arrivals: u64,
    spent: u128,
}

struct BatchStats {
    batches: Vec<Batch>,
    per_batch: u64,
}

impl BatchStats {
    fn new(measured: u64) -> Self {
        let n = (BATCHES as u64).min(measured).max(1);
        Self {
            batches: vec![Batch::default(); n as usize],
            per_batch: measured.div_ceil(n),
        }
    }

    fn slot(&mut self, index: u64) -> &mut Batch {
        let b = ((index / self.per_batch) as usize).min(self.batches.len() - 1);
        &mut self.batches[b]
    }

    fn total(&self) -> Batch {
        self.batches.iter().fold(Batch::default(), |acc, b| Batch {
            slots: acc.slots + b.slots,
            successes: acc.successes + b.successes,
            occupancy: acc.occupancy + b.occupancy,
            empty: acc.empty + b.empty,
            arrivals: acc.arrivals + b.arrivals,
            spent: acc.spent + b.spent,
        })
    }

    /// Standard error of the mean of a per-slot quantity.
    fn se_of<F: Fn(&Batch) -> f64>(&self, f: F) -> f64 {
        let used: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| b.slots > 0)
            .map(|b| f(b) / b.slots as f64)
            .collect();
        batch_se(&used)
    }

    /// Standard error of the ratio Σnum / Σden.
    fn se_of_ratio<N: Fn(&Batch) -> f64, D: Fn(&Batch) -> f64>(&self, num: N, den: D) -> f64 {
        let t = self.total();
        let (sn, sd) = (num(&t), den(&t));
        if sd == 0.0 {
            return 0.0;
        }
        let ratio = sn / sd;
        let mean_den = sd / t.slots as f64;
        let used: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| b.slots > 0)
            .map(|b| (num(b) - ratio * den(b)) / (b.slots as f64 * mean_den))
            .collect();
        batch_se(&used)
    }
}

fn batch_se(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (var / n as f64).sqrt()
}

struct Action {
    power: f64,
    kind: TxDuration,
}

fn energy_cost(power: f64, airtime: f64) -> u128 {
    (power * airtime * NANO).ceil().max(0.0) as u128
}

/// Reception test written directly as the rate inequality.
fn decoded(power: f64, gain: f64, interference: f64, noise: f64, bandwidth: f64, rate: f64) -> bool {
    let sinr = power * gain / (noise + interference);
    bandwidth * (1.0 + sinr).log2() > rate
}

/// Run the full system for `cfg.slots` slots.
pub fn simulate(params: &ScenarioParams, policy: &Policy, cfg: &SimConfig) -> Result<SimResult> {
    params.validate_for_simulation()?;
    policy.validate(params.p_max)?;
    cfg.validate()?;
    Ok(run(params, policy, cfg, |_, _| {}))
}

/// As [`simulate`], calling `observe(slot, state)` at the start of every slot.
pub fn simulate_with_observer<F>(
    params: &ScenarioParams,
    policy: &Policy,
    cfg: &SimConfig,
    observe: F,
) -> Result<SimResult>
where
    F: FnMut(u64, &SimState),
{
    params.validate_for_simulation()?;
    policy.validate(params.p_max)?;
    cfg.validate()?;
    Ok(run(params, policy, cfg, observe))
}

fn run<F>(params: &ScenarioParams, policy: &Policy, cfg: &SimConfig, mut observe: F) -> SimResult
where
    F: FnMut(u64, &SimState),
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let energy = (params.lambda_e > 0.0).then(|| Poisson::new(params.lambda_e).expect("lambda_e validated"));

    let radio = &params.radio;
    let noise = radio.noise_power();
    let w = radio.bandwidth;
    let links = params.links;
    let rate_full = crate::channel::transmission_rate(TxDuration::FullSlot, radio);
    let rate_sensed = crate::channel::transmission_rate(TxDuration::PostSensing, radio);

    let mut st = SimState {
        queue_p: 0,
        battery: 0,
        head_failed: false,
        heard_nack: false,
    };
    let mut ledger = Ledger::default();
    let mut stats = BatchStats::new(cfg.measured_slots());
    let (mut intended, mut transmitted, mut su_ok) = (0u64, 0u64, 0u64);
    let (mut mismatches, mut false_beliefs) = (0u64, 0u64);

    for slot in 0..cfg.slots {
        observe(slot, &st);
        let measuring = slot >= cfg.warmup;
        let pu_active = st.queue_p > 0;
        let retx = st.phase() == PuPhase::Retransmission;

        if measuring {
            if st.heard_nack != retx {
                mismatches += 1;
            }
            if st.heard_nack && !retx {
                false_beliefs += 1;
            }
        }

        let action = if st.heard_nack {
            (rng.random::<f64>() < policy.alpha_r).then_some(Action {
                power: policy.ps3,
                kind: TxDuration::FullSlot,
            })
        } else if rng.random::<f64>() < policy.alpha_s {
            let u = rng.random::<f64>();
            let sensed_busy = if pu_active {
                u >= params.p_miss_detect
            } else {
                u < params.p_false_alarm
            };
            let (alpha, power) = if sensed_busy {
                (policy.alpha_b, policy.ps2)
            } else {
                (policy.alpha_f, policy.ps1)
            };
            (rng.random::<f64>() < alpha).then_some(Action {
                power,
                kind: TxDuration::PostSensing,
            })
        } else {
            (rng.random::<f64>() < policy.alpha_t).then_some(Action {
                power: policy.ps1,
                kind: TxDuration::FullSlot,
            })
        };

        let mut spent = 0u128;
        let su_tx = action.and_then(|a| {
            let cost = energy_cost(a.power, radio.airtime(a.kind));
            if measuring {
                intended += 1;
            }
            let powered = match cfg.force_availability {
                ForceAvailability::Always => true,
                ForceAvailability::Never => false,
                ForceAvailability::Off if st.battery >= cost => {
                    st.battery -= cost;
                    ledger.energy_drained += cost;
                    true
                }
                ForceAvailability::Off => false,
            };
            powered.then(|| {
                spent = cost;
                a
            })
        });

        let pu_success = pu_active && {
            let gain = rng.sample::<f64, _>(Exp1) * links.p_to_dp;
            let interference = match &su_tx {
                Some(a) => a.power * rng.sample::<f64, _>(Exp1) * links.s_to_dp,
                None => 0.0,
            };
            decoded(params.p_primary, gain, interference, noise, w, rate_full)
        };

        let su_success = match &su_tx {
            Some(a) => {
                let gain = rng.sample::<f64, _>(Exp1) * links.s_to_ds;
                let interference = if pu_active {
                    params.p_primary * rng.sample::<f64, _>(Exp1) * links.p_to_ds
                } else {
                    0.0
                };
                let rate = match a.kind {
                    TxDuration::FullSlot => rate_full,
                    TxDuration::PostSensing => rate_sensed,
                };
                decoded(a.power, gain, interference, noise, w, rate)
            }
            None => false,
        };

        st.heard_nack = pu_active && !pu_success && rng.random::<f64>() < params.q;

        let occupancy = st.queue_p;
        if pu_active {
            if pu_success {
                st.queue_p -= 1;
                st.head_failed = false;
                ledger.pu_departures += 1;
                ledger.max_departures_per_slot = ledger.max_departures_per_slot.max(1);
            } else {
                st.head_failed = true;
            }
        }
        let arrival = rng.random::<f64>() < params.lambda_p;
        if arrival {
            st.queue_p += 1;
            ledger.pu_arrivals += 1;
        }
        if let Some(dist) = &energy {
            let units: f64 = dist.sample(&mut rng);
            let nj = units as u128 * NANO as u128;
            st.battery += nj;
            ledger.energy_arrived += nj;
        }

        if measuring {
            if su_tx.is_some() {
                transmitted += 1;
            }
            if su_success {
                su_ok += 1;
            }
            let b = stats.slot(slot - cfg.warmup);
            b.slots += 1;
            b.successes += su_success as u64;
            b.occupancy += occupancy;
            b.empty += (occupancy == 0) as u64;
            b.arrivals += arrival as u64;
            b.spent += spent;
        }
    }

    ledger.final_queue_p = st.queue_p;
    ledger.final_battery = st.battery;

    let t = stats.total();
    let n = t.slots as f64;
    let lambda_hat = t.arrivals as f64 / n;
    let d_p_hat = if t.arrivals == 0 {
        0.0
    } else {
        t.occupancy as f64 / t.arrivals as f64
    };
    let outage = if intended == 0 {
        0.0
    } else {
        (intended - transmitted) as f64 / intended as f64
    };

    SimResult {
        slots_measured: t.slots,
        mu_s_hat: t.successes as f64 / n,
        d_p_hat,
        pi0_hat: t.empty as f64 / n,
        lambda_p_hat: lambda_hat,
        mu_e_hat: t.spent as f64 / NANO / n,
        energy_outage_rate: outage,
        se: StdErrors {
            mu_s: stats.se_of(|b| b.successes as f64),
            d_p: stats.se_of_ratio(|b| b.occupancy as f64, |b| b.arrivals as f64),
            pi0: stats.se_of(|b| b.empty as f64),
            mu_e: stats.se_of(|b| b.spent as f64 / NANO),
            energy_outage_rate: if intended == 0 {
                0.0
            } else {
                (outage * (1.0 - outage) / intended as f64).sqrt()
            },
        },
        su_intended: intended,
        su_transmissions: transmitted,
        su_successes: su_ok,
        belief_mismatches: mismatches,
        false_retx_beliefs: false_beliefs,
        ledger,
    }
}

/// Empirical statistics of the bare primary-queue chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimate {
    pub slots: u64,
    pub pi0_hat: f64,
    pub busy_first_hat: f64,
    pub busy_retx_hat: f64,
    pub d_p_hat: f64,
    pub se_pi0: f64,
    pub se_d_p: f64,
}

/// Simulate only the primary queue, with per-slot service probability
/// `first_tx` on first attempts and `retx` on retransmissions.
pub fn simulate_primary_chain(lambda_p: f64, first_tx: f64, retx: f64, slots: u64, seed: u64) -> ChainEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = BatchStats::new(slots);
    let (mut queue, mut failed) = (0u64, false);
    let mut retx_slots = 0u64;
    for slot in 0..slots {
        let b = stats.slot(slot);
        b.slots += 1;
        b.occupancy += queue;
        b.empty += (queue == 0) as u64;
        if queue > 0 {
            retx_slots += failed as u64;
            let p = if failed { retx } else { first_tx };
            if rng.random::<f64>() < p {
                queue -= 1;
                failed = false;
            } else {
                failed = true;
            }
        }
        if rng.random::<f64>() < lambda_p {
            queue += 1;
            b.arrivals += 1;
        }
    }
    let t = stats.total();
    let n = t.slots as f64;
    let busy = n - t.empty as f64;
    ChainEstimate {
        slots,
        pi0_hat: t.empty as f64 / n,
        busy_first_hat: (busy - retx_slots as f64) / n,
        busy_retx_hat: retx_slots as f64 / n,
        d_p_hat: if t.arrivals == 0 {
            0.0
        } else {
            t.occupancy as f64 / t.arrivals as f64
        },
        se_pi0: stats.se_of(|b| b.empty as f64),
        se_d_p: stats.se_of_ratio(|b| b.occupancy as f64, |b| b.arrivals as f64),
    }
}
