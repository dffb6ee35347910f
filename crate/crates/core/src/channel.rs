//! Outage-based link success probabilities under Rayleigh block fading.
//!
//! A packet of `beta` bits sent over a slot (or over the part of the slot left
//! after sensing) must be carried at rate `r = beta / duration`. The link is in
//! outage when `W log2(1 + SINR) <= r`. With exponentially distributed channel
//! power gains and a single interferer the success probability has the closed
//! form
//!
//! ```text
//! P(success) = σ²_A e^{-a/σ²_A} / (σ²_A + b σ²_B)
//! a = (2^{r/W} - 1) N0 W / P_A,   b = (2^{r/W} - 1) P_B / P_A
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, ModelError, Result};

/// Physical-layer constants shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    /// Packet payload, bits.
    pub payload_bits: f64,
    /// Slot duration, seconds.
    pub slot_duration: f64,
    /// Sensing duration at the start of a slot, seconds.
    pub sensing_duration: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
}

impl RadioConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.payload_bits >= 0.0 && self.payload_bits.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "beta",
                value: self.payload_bits,
                reason: "must be non-negative and finite",
            });
        }
        check_positive("T", self.slot_duration)?;
        if !(self.sensing_duration > 0.0 && self.sensing_duration < self.slot_duration) {
            return Err(ModelError::InvalidParameter {
                name: "tau",
                value: self.sensing_duration,
                reason: "must satisfy 0 < tau < T",
            });
        }
        check_positive("W", self.bandwidth)?;
        check_positive("N0", self.noise_psd)
    }

    /// Time left for data after a sensing phase.
    pub fn post_sensing_duration(&self) -> f64 {
        self.slot_duration - self.sensing_duration
    }

    /// Airtime of a transmission of the given kind.
    pub fn airtime(&self, kind: TxDuration) -> f64 {
        match kind {
            TxDuration::FullSlot => self.slot_duration,
            TxDuration::PostSensing => self.post_sensing_duration(),
        }
    }

    /// Noise power over the whole band, `N0 W`.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    /// SNR threshold `2^{r/W} - 1` a transmission of this kind must exceed.
    pub fn sinr_threshold(&self, kind: TxDuration) -> f64 {
        (transmission_rate(kind, self) / self.bandwidth).exp2() - 1.0
    }
}

/// Fading power `σ²` of each transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkVariances {
    pub p_to_dp: f64,
    pub s_to_dp: f64,
    pub p_to_ds: f64,
    pub s_to_ds: f64,
}

impl LinkVariances {
    pub fn uniform(var: f64) -> Self {
        Self {
            p_to_dp: var,
            s_to_dp: var,
            p_to_ds: var,
            s_to_ds: var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("var_p_dp", self.p_to_dp)?;
        check_positive("var_s_dp", self.s_to_dp)?;
        check_positive("var_p_ds", self.p_to_ds)?;
        check_positive("var_s_ds", self.s_to_ds)
    }
}

/// Whether a transmission occupies the whole slot or only the part after
/// sensing. Determines the required rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxDuration {
    FullSlot,
    PostSensing,
}

impl TxDuration {
    pub fn index(self) -> u8 {
        match self {
            TxDuration::FullSlot => 0,
            TxDuration::PostSensing => 1,
        }
    }
}

/// Rate in bits/s needed to push one packet through in the available airtime.
pub fn transmission_rate(kind: TxDuration, radio: &RadioConstants) -> f64 {
    radio.payload_bits / radio.airtime(kind)
}

/// Probability that a transmission at power `p_a` survives one interferer at
/// power `p_b` (use `0.0` for no interferer).
///
/// A silent transmitter (`p_a <= 0`) never succeeds unless the payload is empty.
pub fn success_prob(
    kind: TxDuration,
    p_a: f64,
    p_b: f64,
    var_ad: f64,
    var_bd: f64,
    radio: &RadioConstants,
) -> f64 {
    let threshold = radio.sinr_threshold(kind);
    if threshold == 0.0 {
        return 1.0;
    }
    if p_a <= 0.0 {
        return 0.0;
    }
    let a = threshold * radio.noise_power() / p_a;
    let b = threshold * p_b.max(0.0) / p_a;
    var_ad * (-a / var_ad).exp() / (var_ad + b * var_bd)
}
