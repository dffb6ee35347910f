//! Acceptance suite. Each test prints one line per criterion:
//!
//! ```text
//! ACCEPTANCE <id> PASS|FAIL <summary>
//! ```
//!
//! Run with `cargo test -p ehcr-cli --test acceptance -- --nocapture --test-threads=1`
//! to see every line in order.

use std::time::{Duration, Instant};

use ehcr_cli::sweep::{run_sweep, Axis, SweepRow, SweepSpec};
use ehcr_core::queueing::SteadyState;
use ehcr_core::simulator::{simulate, ForceAvailability, SimConfig};
use ehcr_core::{
    evaluate, maximize, throughput_bound, BoundMode, OptimOptions, Policy, PowerPairing, ScenarioParams, TxDuration,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

fn report(id: &str, pass: bool, summary: impl AsRef<str>) {
    println!(
        "ACCEPTANCE {id} {} {}",
        if pass { "PASS" } else { "FAIL" },
        summary.as_ref()
    );
    assert!(pass, "criterion {id} failed: {}", summary.as_ref());
}

fn detail(text: impl AsRef<str>) {
    println!("    {}", text.as_ref());
}

fn seconds(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn random_policy<R: Rng>(rng: &mut R, p_max: f64) -> Policy {
    Policy {
        alpha_s: rng.random(),
        alpha_f: rng.random(),
        alpha_t: rng.random(),
        alpha_b: rng.random(),
        alpha_r: rng.random(),
        ps1: rng.random::<f64>() * p_max,
        ps2: rng.random::<f64>() * p_max,
        ps3: rng.random::<f64>() * p_max,
    }
}

// ---------------------------------------------------------------------------
// 1. Channel closed form against Monte Carlo.

/// Monte Carlo estimate of `P[W log2(1 + SINR) > rate]` with unit-variance
/// Rayleigh fading on both links.
fn outage_free_mc(rate: f64, p_a: f64, p_b: f64, draws: u64, seed: u64) -> f64 {
    let consts = ScenarioParams::reference().radio;
    let noise = consts.noise_psd * consts.bandwidth;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..draws {
        let gain_a: f64 = rng.sample(Exp1);
        let gain_b: f64 = rng.sample(Exp1);
        let sinr = p_a * gain_a / (noise + p_b * gain_b);
        if consts.bandwidth * (1.0 + sinr).log2() > rate {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

#[test]
fn criterion_1_channel_oracle() {
    let start = Instant::now();
    let params = ScenarioParams::reference();
    let draws = 1_000_000u64;
    let mut worst_z = 0.0f64;
    let mut configs = 0;
    let mut all_within = true;
    for (i, kind) in [TxDuration::FullSlot, TxDuration::PostSensing].into_iter().enumerate() {
        let rate = params.radio.payload_bits / params.radio.airtime(kind);
        for p_b in [0.0, 20.0, 32.0] {
            for p_a in [20.0, 32.0] {
                let exact = ehcr_core::channel::success_prob(kind, p_a, p_b, 1.0, 1.0, &params.radio);
                let seed = 1000 + configs as u64;
                let est = outage_free_mc(rate, p_a, p_b, draws, seed);
                let se = (exact * (1.0 - exact) / draws as f64).sqrt();
                let z = (est - exact).abs() / se;
                worst_z = worst_z.max(z);
                all_within &= z <= 3.0;
                configs += 1;
                detail(format!(
                    "i={i} P_A={p_a} P_B={p_b}: closed form {exact:.6}, MC {est:.6}, |z| = {z:.2}"
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "1",
        all_within && configs >= 5 && elapsed < Duration::from_secs(10),
        format!(
            "channel oracle: {configs} configs x {draws} draws, max |z| = {worst_z:.2} (limit 3), runtime {} (limit 10s)",
            seconds(elapsed)
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Steady-state identities.

/// Successor states of the primary chain, encoded as 0 (empty), 2k-1 for
/// (k, first attempt) and 2k for (k, retransmission).
fn successors(state: usize, lambda: f64, first: f64, retx: f64) -> [(usize, f64); 4] {
    let first_state = |k: usize| if k == 0 { 0 } else { 2 * k - 1 };
    if state == 0 {
        return [(1, lambda), (0, 1.0 - lambda), (0, 0.0), (0, 0.0)];
    }
    let k = state.div_ceil(2);
    let s = if state % 2 == 1 { first } else { retx };
    [
        (first_state(k), s * lambda),
        (first_state(k - 1), s * (1.0 - lambda)),
        (2 * (k + 1), (1.0 - s) * lambda),
        (2 * k, (1.0 - s) * (1.0 - lambda)),
    ]
}

fn state_mass(ss: &SteadyState, state: usize) -> f64 {
    match state {
        0 => ss.pi0,
        s if s % 2 == 1 => ss.pi(s.div_ceil(2) as u32),
        s => ss.chi((s / 2) as u32),
    }
}

fn max_balance_residual(ss: &SteadyState, max_level: usize) -> f64 {
    let n = 2 * (max_level + 2) + 1;
    let mut inflow = vec![0.0; n];
    for s in 0..n {
        let m = state_mass(ss, s);
        for (t, p) in successors(s, ss.lambda_p, ss.first_tx, ss.retx) {
            if t < n {
                inflow[t] += m * p;
            }
        }
    }
    (0..=2 * max_level)
        .map(|s| (inflow[s] - state_mass(ss, s)).abs())
        .fold(0.0, f64::max)
}

/// Σ_{k≥1} of a level family whose terms from k = 2 on are geometric with
/// ratio `r`.
fn family_sum(first: f64, second: f64, r: f64) -> f64 {
    first + if second == 0.0 { 0.0 } else { second / (1.0 - r) }
}

fn random_stable_triple<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
    loop {
        let l: f64 = rng.random_range(1e-3..0.999);
        let o: f64 = rng.random_range(1e-3..=1.0);
        let g: f64 = rng.random_range(1e-3..=1.0);
        if l <= l * o + (1.0 - l) * g - 1e-9 {
            return (l, o, g);
        }
    }
}

#[test]
fn criterion_2_steady_state_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_norm, mut worst_pi, mut worst_chi, mut worst_bal) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let n = 1000;
    for _ in 0..n {
        let (l, o, g) = random_stable_triple(&mut rng);
        let ss = SteadyState::solve(l, o, g).unwrap();
        let r = ss.ratio();
        let sum_pi = family_sum(ss.pi(1), ss.pi(2), r);
        let sum_chi = family_sum(ss.chi(1), ss.chi(2), r);
        worst_norm = worst_norm.max((ss.pi0 + sum_pi + sum_chi - 1.0).abs());
        worst_pi = worst_pi.max((sum_pi - l).abs());
        worst_chi = worst_chi.max((sum_chi - l * (1.0 - o) / g).abs());
        worst_bal = worst_bal.max(max_balance_residual(&ss, 50));
    }
    let tol = 1e-10;
    report(
        "2",
        worst_norm <= tol && worst_pi <= tol && worst_chi <= tol && worst_bal <= tol,
        format!(
            "steady state over {n} stable triples: normalization {worst_norm:.1e}, sum pi {worst_pi:.1e}, sum chi {worst_chi:.1e}, balance (k<=50) {worst_bal:.1e} (limit 1e-10 each)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Delay formula.

/// Bare primary-chain simulation; returns mean occupancy / measured arrival rate.
fn chain_delay_mc(lambda: f64, first: f64, retx: f64, slots: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut queue, mut head_failed) = (0u64, false);
    let (mut area, mut arrivals) = (0u128, 0u64);
    for _ in 0..slots {
        area += queue as u128;
        if queue > 0 {
            let p = if head_failed { retx } else { first };
            if rng.random::<f64>() < p {
                queue -= 1;
                head_failed = false;
            } else {
                head_failed = true;
            }
        }
        if rng.random::<f64>() < lambda {
            queue += 1;
            arrivals += 1;
        }
    }
    area as f64 / arrivals as f64
}

#[test]
fn criterion_3_delay_formula() {
    let start = Instant::now();

    // (a) closed form against the truncated Little's-law series.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_series, mut series_cases) = (0.0f64, 0);
    while series_cases < 1000 {
        let (l, o, g) = random_stable_triple(&mut rng);
        let ss = SteadyState::solve(l, o, g).unwrap();
        let r = ss.ratio();
        let terms = ((1e-18f64).ln() / r.ln()).ceil();
        if !(terms.is_finite() && terms < 2e6) {
            continue;
        }
        let mut occupancy = 0.0;
        let mut k = 1u32;
        loop {
            let term = k as f64 * (ss.pi(k) + ss.chi(k));
            occupancy += term;
            if k > 2 && term < 1e-18 * occupancy.max(1.0) {
                break;
            }
            k += 1;
        }
        let series = occupancy / l;
        worst_series = worst_series.max((series - ss.mean_delay()).abs() / ss.mean_delay().max(1.0));
        series_cases += 1;
    }
    let a_ok = worst_series <= 1e-8;
    detail(format!("(a) {series_cases} triples, max |closed form - series| = {worst_series:.2e} (limit 1e-8)"));

    // (b) equal service probabilities reduce to (1 - λ)/(μ - λ) exactly.
    let mut b_ok = true;
    for _ in 0..1000 {
        let mu: f64 = rng.random_range(0.01..=1.0);
        let l: f64 = rng.random_range(0.0..mu);
        if l <= 0.0 || l > mu - 1e-9 {
            continue;
        }
        let ss = SteadyState::solve(l, mu, mu).unwrap();
        b_ok &= ss.mean_delay() == (1.0 - l) / (mu - l);
    }
    detail(format!("(b) symmetric reduction exact: {b_ok}"));

    // (c) chain simulation at 10^7 slots.
    let quiet = ScenarioParams::reference().pu_alone();
    let mut worst_rel = 0.0f64;
    for (i, &(l, o, g)) in [(0.2, quiet, quiet), (0.2, 0.6, 0.5), (0.3, 0.8, 0.45), (0.1, 0.3, 0.7)]
        .iter()
        .enumerate()
    {
        let exact = SteadyState::solve(l, o, g).unwrap().mean_delay();
        let est = chain_delay_mc(l, o, g, 10_000_000, 30 + i as u64);
        let rel = (est / exact - 1.0).abs();
        worst_rel = worst_rel.max(rel);
        detail(format!("(c) ({l}, {o:.4}, {g:.4}): closed form {exact:.5}, simulated {est:.5}, rel err {rel:.2e}"));
    }
    let c_ok = worst_rel <= 0.02;
    let elapsed = start.elapsed();
    report(
        "3",
        a_ok && b_ok && c_ok && elapsed < Duration::from_secs(60),
        format!(
            "delay: series err {worst_series:.1e}, symmetric exact {b_ok}, simulation rel err {worst_rel:.2e} (limit 2%), runtime {}",
            seconds(elapsed)
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Bound sandwich.

#[test]
fn criterion_4_bound_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = ScenarioParams::reference();
    let target = 1000;
    let (mut accepted, mut violations, mut worst) = (0, 0, 0.0f64);
    let mut worst_case = None;
    while accepted < target {
        let params = ScenarioParams {
            lambda_p: rng.random_range(0.01..0.5),
            ..base
        };
        let policy = random_policy(&mut rng, params.p_max);
        let lower = evaluate(&params, &policy, BoundMode::LowerThroughput, PowerPairing::Protocol);
        let upper = evaluate(&params, &policy, BoundMode::UpperThroughput, PowerPairing::Protocol);
        if !(lower.feasible && upper.feasible) {
            continue;
        }
        accepted += 1;
        let excess = lower.mu_s() - upper.mu_s();
        if excess > 1e-12 {
            violations += 1;
            if excess > worst {
                worst = excess;
                worst_case = Some((params.lambda_p, policy, lower.report, upper.report));
            }
        }
    }
    if let Some((l, p, lo, hi)) = worst_case {
        detail(format!("largest violation at lambda_p = {l:.4}, policy {p:?}"));
        detail(format!(
            "    lower: mu_s {:.6} Pavail {:.4} pi0 {:.4} | upper: mu_s {:.6} Pavail {:.4} pi0 {:.4}",
            lo.mu_s, lo.pavail, lo.pi0, hi.mu_s, hi.pavail, hi.pi0
        ));
    }
    report(
        "4",
        violations == 0,
        format!(
            "bound sandwich over {accepted} random feasible policies: {violations} with lower > upper + 1e-12, largest excess {worst:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Full-system consistency.

#[test]
fn criterion_5_full_system_consistency() {
    let params = ScenarioParams {
        q: 0.5,
        lambda_e: 20.0,
        ..ScenarioParams::reference()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut policies = Vec::new();
    while policies.len() < 5 {
        let p = random_policy(&mut rng, params.p_max);
        if evaluate(&params, &p, BoundMode::LowerThroughput, PowerPairing::Protocol).feasible {
            policies.push(p);
        }
    }
    let handles: Vec<_> = policies
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            std::thread::spawn(move || {
                let cfg = SimConfig {
                    slots: 10_000_000,
                    seed: 50 + i as u64,
                    warmup: 10_000,
                    force_availability: ForceAvailability::Off,
                };
                (p, simulate(&params, &p, &cfg).unwrap())
            })
        })
        .collect();
    let mut excursions = 0;
    let mut worst = 0.0f64;
    for h in handles {
        let (p, sim) = h.join().unwrap();
        let lo = throughput_bound(&params, &p, BoundMode::LowerThroughput, PowerPairing::Protocol).unwrap().mu_s;
        let hi = throughput_bound(&params, &p, BoundMode::UpperThroughput, PowerPairing::Protocol).unwrap().mu_s;
        let band = 3.0 * sim.se.mu_s + 0.01;
        let excursion = (lo - band - sim.mu_s_hat).max(sim.mu_s_hat - hi - band).max(0.0);
        let raw = (lo - sim.mu_s_hat).max(sim.mu_s_hat - hi).max(0.0);
        if excursion > 0.0 {
            excursions += 1;
        }
        worst = worst.max(excursion);
        detail(format!(
            "LB {lo:.5}  sim {:.5} (se {:.1e})  UB {hi:.5}  outside [LB, UB] by {raw:.2e}, beyond slack by {excursion:.2e}",
            sim.mu_s_hat, sim.se.mu_s
        ));
    }
    report(
        "5",
        excursions == 0,
        format!("full-system simulation at 1e7 slots: {excursions}/5 outside [LB - 3SE - 0.01, UB + 3SE + 0.01], worst excursion {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// 6. Optimizer trends.

const TREND_TOL: f64 = 1e-3;

fn sweep(axis: Axis, values: &[f64], fixed: ScenarioParams) -> (Vec<SweepRow>, Duration) {
    let start = Instant::now();
    let spec = SweepSpec {
        axis,
        values: values.to_vec(),
        modes: BoundMode::ALL.to_vec(),
        fixed,
        optim: OptimOptions {
            restarts: 64,
            seed: 1,
            ..Default::default()
        },
    };
    (run_sweep(&spec).unwrap(), start.elapsed())
}

/// Largest step against the required direction (`sign` = +1 for
/// nondecreasing, -1 for nonincreasing).
fn worst_reversal(series: &[f64], sign: f64) -> f64 {
    series
        .windows(2)
        .map(|w| (-(w[1] - w[0]) * sign).max(0.0))
        .fold(0.0, f64::max)
}

fn series(rows: &[SweepRow], mode: BoundMode, pick: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    rows.iter().filter(|r| r.result.report.mode == mode).map(pick).collect()
}

#[test]
fn criterion_6_optimizer_trends() {
    let base = ScenarioParams::reference();
    let checks: [(Axis, [f64; 6], f64); 4] = [
        (Axis::LambdaP, [0.05, 0.1, 0.15, 0.2, 0.25, 0.3], -1.0),
        (Axis::LambdaE, [5.0, 10.0, 15.0, 20.0, 25.0, 30.0], 1.0),
        (Axis::Q, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], 1.0),
        (Axis::DMax, [3.0, 4.0, 5.0, 6.0, 8.0, 10.0], 1.0),
    ];
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (axis, values, sign) in checks {
        let (rows, elapsed) = sweep(axis, &values, base);
        slowest = slowest.max(elapsed);
        for mode in BoundMode::ALL {
            let mu = series(&rows, mode, |r| r.result.report.mu_s);
            let rev = worst_reversal(&mu, sign);
            worst = worst.max(rev);
            ok &= rev <= TREND_TOL && rows.iter().all(|r| r.result.feasible);
            detail(format!(
                "{axis} {mode}: mu_s* = {:?} ({}), worst reversal {rev:.1e}",
                mu.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
                if sign > 0.0 { "nondecreasing" } else { "nonincreasing" }
            ));
            if axis == Axis::Q {
                let d = series(&rows, mode, |r| r.result.report.d_p);
                let rev = worst_reversal(&d, -1.0);
                worst = worst.max(rev);
                ok &= rev <= TREND_TOL;
                detail(format!(
                    "q {mode}: D_p at optimum = {:?} (nonincreasing), worst reversal {rev:.1e}",
                    d.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
                ));
            }
        }
        detail(format!("{axis} sweep runtime {}", seconds(elapsed)));
    }
    ok &= slowest < Duration::from_secs(600);
    report(
        "6",
        ok,
        format!("optimizer trends on 6-point grids: worst reversal {worst:.1e} (limit 1e-3), slowest sweep {}", seconds(slowest)),
    );
}

// ---------------------------------------------------------------------------
// 7. Power-allocation gain and the feasibility boundary.

fn power_setting() -> ScenarioParams {
    ScenarioParams {
        lambda_e: 20.0,
        q: 0.8,
        ..ScenarioParams::reference()
    }
}

#[test]
fn criterion_7a_power_allocation_gain() {
    let grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35];
    let free = OptimOptions::default();
    let pinned = OptimOptions {
        pin_powers: true,
        ..free
    };
    let mut worst = 0.0f64;
    for mode in BoundMode::ALL {
        for &l in &grid {
            let params = ScenarioParams {
                lambda_p: l,
                ..power_setting()
            };
            let a = maximize(&params, mode, &free).report.mu_s;
            let b = maximize(&params, mode, &pinned).report.mu_s;
            worst = worst.max(b - a);
            detail(format!("{mode} lambda_p={l}: free {a:.5}, pinned at P_max {b:.5}"));
        }
    }
    report(
        "7a",
        worst <= 1e-3,
        format!("free-power optimum >= pinned optimum - 1e-3 on lambda_p grid: worst shortfall {:.1e}", worst.max(0.0)),
    );
}

/// Smallest arrival probability at which the optimizer finds no feasible policy.
fn feasibility_boundary(base: ScenarioParams, mode: BoundMode) -> f64 {
    let opts = OptimOptions {
        restarts: 16,
        ..Default::default()
    };
    let feasible = |l: f64| maximize(&ScenarioParams { lambda_p: l, ..base }, mode, &opts).feasible;
    let (mut lo, mut hi) = (0.01, 0.99);
    assert!(feasible(lo) && !feasible(hi));
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn criterion_7b_feasibility_boundary() {
    let base = power_setting();
    let boundary = feasibility_boundary(base, BoundMode::LowerThroughput);
    let at_onset = maximize(
        &ScenarioParams {
            lambda_p: 0.3759,
            ..base
        },
        BoundMode::LowerThroughput,
        &OptimOptions::default(),
    );
    detail(format!(
        "at lambda_p = 0.3759: feasible = {}, mu_s* = {:.5}, D_p = {:.3}",
        at_onset.feasible, at_onset.report.mu_s, at_onset.report.d_p
    ));
    let tight = feasibility_boundary(ScenarioParams { d_max: 3.0, ..base }, BoundMode::LowerThroughput);
    detail(format!("for information: with D_max = 3 the boundary is {tight:.4}"));
    report(
        "7b",
        (0.3559..=0.3959).contains(&boundary),
        format!("feasibility boundary at D_max = 10: lambda_p = {boundary:.4} (required within [0.3559, 0.3959])"),
    );
}

// ---------------------------------------------------------------------------
// 8. Determinism.

#[test]
fn criterion_8_determinism() {
    let fixed = power_setting();
    let values = [0.1, 0.2, 0.3];
    let run = || sweep(Axis::LambdaP, &values, fixed).0;
    let reference = run();
    let concurrent: Vec<_> = (0..3).map(|_| std::thread::spawn(move || sweep(Axis::LambdaP, &values, fixed).0)).collect();
    let serial_pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = serial_pool.install(run);
    let same_bits = |a: &[SweepRow], b: &[SweepRow]| {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| {
                x.result == y.result
                    && x.result.report.mu_s.to_bits() == y.result.report.mu_s.to_bits()
                    && x.result.best_policy.to_array().map(f64::to_bits) == y.result.best_policy.to_array().map(f64::to_bits)
            })
    };
    let mut optimizer_ok = same_bits(&reference, &serial);
    for h in concurrent {
        optimizer_ok &= same_bits(&reference, &h.join().unwrap());
    }

    let policy = Policy {
        alpha_s: 0.4,
        alpha_f: 0.9,
        alpha_t: 0.6,
        alpha_b: 0.3,
        alpha_r: 0.8,
        ps1: 28.0,
        ps2: 14.0,
        ps3: 6.0,
    };
    let cfg = SimConfig {
        slots: 500_000,
        seed: 8,
        ..SimConfig::default()
    };
    let sim_ref = simulate(&fixed, &policy, &cfg).unwrap();
    let sims: Vec<_> = (0..3)
        .map(|_| std::thread::spawn(move || simulate(&fixed, &policy, &cfg).unwrap()))
        .collect();
    let mut simulator_ok = true;
    for h in sims {
        let s = h.join().unwrap();
        simulator_ok &= s == sim_ref && s.mu_s_hat.to_bits() == sim_ref.mu_s_hat.to_bits();
    }
    report(
        "8",
        optimizer_ok && simulator_ok,
        format!("determinism: optimizer sweeps identical across concurrent and single-thread runs = {optimizer_ok}, simulator = {simulator_ok}"),
    );
}
