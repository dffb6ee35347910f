#![allow(dead_code)]

use ehcr_core::{Policy, ScenarioParams};

/// Non-outage probability of a Rayleigh link with one Rayleigh interferer,
/// written out from scratch for use as a test oracle.
pub fn link_success(rate: f64, w: f64, n0: f64, p_sig: f64, p_int: f64, var_sig: f64, var_int: f64) -> f64 {
    let thr = 2f64.powf(rate / w) - 1.0;
    if p_sig <= 0.0 {
        return 0.0;
    }
    let noise_term = (-thr * n0 * w / (p_sig * var_sig)).exp();
    let interference_term = 1.0 / (1.0 + thr * p_int * var_int / (p_sig * var_sig));
    noise_term * interference_term
}

/// Rates for (full slot, post-sensing).
pub fn rates(params: &ScenarioParams) -> (f64, f64) {
    let r = &params.radio;
    (
        r.payload_bits / r.slot_duration,
        r.payload_bits / (r.slot_duration - r.sensing_duration),
    )
}

pub fn pu_ok(params: &ScenarioParams, su_power: f64) -> f64 {
    let (r0, _) = rates(params);
    let l = params.links;
    link_success(
        r0,
        params.radio.bandwidth,
        params.radio.noise_psd,
        params.p_primary,
        su_power,
        l.p_to_dp,
        l.s_to_dp,
    )
}

pub fn su_ok(params: &ScenarioParams, post_sensing: bool, su_power: f64, pu_power: f64) -> f64 {
    let (r0, r1) = rates(params);
    let l = params.links;
    link_success(
        if post_sensing { r1 } else { r0 },
        params.radio.bandwidth,
        params.radio.noise_psd,
        su_power,
        pu_power,
        l.s_to_ds,
        l.p_to_ds,
    )
}

/// Primary queue phase at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    First,
    Retx,
}

/// One protocol branch: its probability, the SU transmission (power, post-sensing?)
/// if any, and whether the transmission is the post-NACK one.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    pub prob: f64,
    pub tx: Option<(f64, bool)>,
}

/// All SU decision branches in a given PU phase, for an SU that decoded the
/// last NACK (`heard`) or not. Energy is assumed available.
pub fn branches(params: &ScenarioParams, pol: &Policy, phase: Phase, heard: bool) -> Vec<Branch> {
    let mut out = Vec::new();
    if heard {
        out.push(Branch { prob: pol.alpha_r, tx: Some((pol.ps3, false)) });
        out.push(Branch { prob: 1.0 - pol.alpha_r, tx: None });
        return out;
    }
    let busy_prob = match phase {
        Phase::Idle => params.p_false_alarm,
        _ => 1.0 - params.p_miss_detect,
    };
    let s = pol.alpha_s;
    out.push(Branch { prob: s * (1.0 - busy_prob) * pol.alpha_f, tx: Some((pol.ps1, true)) });
    out.push(Branch { prob: s * (1.0 - busy_prob) * (1.0 - pol.alpha_f), tx: None });
    out.push(Branch { prob: s * busy_prob * pol.alpha_b, tx: Some((pol.ps2, true)) });
    out.push(Branch { prob: s * busy_prob * (1.0 - pol.alpha_b), tx: None });
    out.push(Branch { prob: (1.0 - s) * pol.alpha_t, tx: Some((pol.ps1, false)) });
    out.push(Branch { prob: (1.0 - s) * (1.0 - pol.alpha_t), tx: None });
    out
}

/// Transition kernel of the primary chain. States are encoded as
/// `0` (empty), `2k - 1` for `(k, F)` and `2k` for `(k, R)`.
pub fn chain_successors(state: usize, lambda: f64, first: f64, retx: f64) -> Vec<(usize, f64)> {
    let first_state = |k: usize| if k == 0 { 0 } else { 2 * k - 1 };
    let retx_state = |k: usize| 2 * k;
    if state == 0 {
        return vec![(first_state(1), lambda), (0, 1.0 - lambda)];
    }
    let k = state.div_ceil(2);
    let s = if state % 2 == 1 { first } else { retx };
    vec![
        (first_state(k), s * lambda),
        (first_state(k - 1), s * (1.0 - lambda)),
        (retx_state(k + 1), (1.0 - s) * lambda),
        (retx_state(k), (1.0 - s) * (1.0 - lambda)),
    ]
}

/// Stationary vector of the chain truncated at `levels` by repeated
/// application of the kernel until the update falls below `tol`.
pub fn stationary_by_iteration(lambda: f64, first: f64, retx: f64, levels: usize, tol: f64) -> Vec<f64> {
    let n = 2 * levels + 1;
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..5_000_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, &mass) in p.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (t, pr) in chain_successors(s, lambda, first, retx) {
                // Mass leaving the truncation stays put.
                let t = if t < n { t } else { s };
                next[t] += mass * pr;
            }
        }
        let diff: f64 = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if diff < tol {
            break;
        }
    }
    p
}
