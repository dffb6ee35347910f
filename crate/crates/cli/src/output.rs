//! CSV records with a fixed column order. Floating-point cells carry 12
//! significant digits.

use std::io::Write;

use ehcr_core::simulator::SimResult;
use ehcr_core::{BoundMode, Evaluation, OptimResult, Policy};

use crate::error::CliError;

pub const SIG_DIGITS: usize = 12;

/// Format `x` with [`SIG_DIGITS`] significant digits, in plain notation for
/// moderate magnitudes and scientific otherwise. Trailing zeros are dropped.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const POLICY_COLUMNS: [&str; 8] = ["alpha_s", "alpha_f", "alpha_t", "alpha_b", "alpha_r", "Ps1", "Ps2", "Ps3"];

pub const REPORT_COLUMNS: [&str; 8] = ["mode", "mu_s", "eta", "pi0", "Pavail", "D_p", "stable", "feasible"];

pub const SIM_COLUMNS: [&str; 19] = [
    "slots_measured",
    "seed",
    "mu_s_hat",
    "se_mu_s",
    "D_p_hat",
    "se_D_p",
    "pi0_hat",
    "se_pi0",
    "mu_e_hat",
    "se_mu_e",
    "energy_outage_rate",
    "se_energy_outage_rate",
    "lambda_p_hat",
    "su_intended",
    "su_transmissions",
    "su_successes",
    "belief_mismatches",
    "pu_arrivals",
    "pu_departures",
];

fn policy_cells(p: &Policy) -> Vec<String> {
    p.to_array().iter().map(|&v| fmt_num(v)).collect()
}

/// `mode, mu_s, eta, pi0, Pavail, D_p, stable, feasible`.
pub fn report_cells(mode: BoundMode, ev: &Evaluation) -> Vec<String> {
    let r = &ev.report;
    vec![
        mode.to_string(),
        fmt_num(r.mu_s),
        fmt_num(r.eta),
        fmt_num(r.pi0),
        fmt_num(r.pavail),
        fmt_num(r.d_p),
        ev.stable.to_string(),
        ev.feasible.to_string(),
    ]
}

pub fn eval_header() -> Vec<String> {
    REPORT_COLUMNS.iter().chain(&POLICY_COLUMNS).map(|s| s.to_string()).collect()
}

pub fn eval_row(mode: BoundMode, ev: &Evaluation, policy: &Policy) -> Vec<String> {
    let mut row = report_cells(mode, ev);
    row.extend(policy_cells(policy));
    row
}

pub fn optim_header() -> Vec<String> {
    let mut h: Vec<String> = ["mode", "mu_s", "eta", "pi0", "Pavail", "D_p", "feasible"]
        .iter()
        .chain(&POLICY_COLUMNS)
        .map(|s| s.to_string())
        .collect();
    h.push("restarts_converged".into());
    h
}

pub fn optim_row(r: &OptimResult) -> Vec<String> {
    let rep = &r.report;
    let mut row = vec![
        rep.mode.to_string(),
        fmt_num(rep.mu_s),
        fmt_num(rep.eta),
        fmt_num(rep.pi0),
        fmt_num(rep.pavail),
        fmt_num(rep.d_p),
        r.feasible.to_string(),
    ];
    row.extend(policy_cells(&r.best_policy));
    row.push(r.restarts_converged.to_string());
    row
}

pub fn sim_header() -> Vec<String> {
    SIM_COLUMNS.iter().map(|s| s.to_string()).collect()
}

pub fn sim_row(r: &SimResult, seed: u64) -> Vec<String> {
    vec![
        r.slots_measured.to_string(),
        seed.to_string(),
        fmt_num(r.mu_s_hat),
        fmt_num(r.se.mu_s),
        fmt_num(r.d_p_hat),
        fmt_num(r.se.d_p),
        fmt_num(r.pi0_hat),
        fmt_num(r.se.pi0),
        fmt_num(r.mu_e_hat),
        fmt_num(r.se.mu_e),
        fmt_num(r.energy_outage_rate),
        fmt_num(r.se.energy_outage_rate),
        fmt_num(r.lambda_p_hat),
        r.su_intended.to_string(),
        r.su_transmissions.to_string(),
        r.su_successes.to_string(),
        r.belief_mismatches.to_string(),
        r.ledger.pu_arrivals.to_string(),
        r.ledger.pu_departures.to_string(),
    ]
}

/// Write a header and rows as CSV.
pub fn write_csv<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Render CSV to a string.
pub fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
