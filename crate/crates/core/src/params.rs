//! Exogenous scenario constants and the secondary user's access policy.

use serde::{Deserialize, Serialize};

use crate::channel::{success_prob, LinkVariances, RadioConstants, TxDuration};
use crate::error::{check_positive, check_prob, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Primary packet arrival probability per slot.
    pub lambda_p: f64,
    /// Mean energy arrivals per slot (1 unit = 1 J).
    pub lambda_e: f64,
    /// Probability the SU decodes a primary ACK/NACK.
    pub q: f64,
    /// Primary transmit power, W.
    pub p_primary: f64,
    pub p_miss_detect: f64,
    pub p_false_alarm: f64,
    /// Secondary power cap, W.
    pub p_max: f64,
    /// Primary delay threshold, slots.
    pub d_max: f64,
    pub radio: RadioConstants,
    pub links: LinkVariances,
}

impl ScenarioParams {
    /// Numerical settings used throughout the evaluation: 10-bit packets,
    /// 1 s slots, 0.3 s sensing, 8 Hz bandwidth, unit noise and fading,
    /// 20 W primary, 32 W secondary cap, 30% sensing errors.
    /// `lambda_p`, `lambda_e`, `q` and `d_max` take the most common sweep values.
    pub fn reference() -> Self {
        Self {
            lambda_p: 0.2,
            lambda_e: 20.0,
            q: 0.5,
            p_primary: 20.0,
            p_miss_detect: 0.3,
            p_false_alarm: 0.3,
            p_max: 32.0,
            d_max: 10.0,
            radio: RadioConstants {
                payload_bits: 10.0,
                slot_duration: 1.0,
                sensing_duration: 0.3,
                bandwidth: 8.0,
                noise_psd: 1.0,
            },
            links: LinkVariances::uniform(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_p > 0.0 && self.lambda_p < 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "lambda_p",
                value: self.lambda_p,
                reason: "must lie in (0, 1)",
            });
        }
        self.validate_common()
    }

    /// Like [`validate`](Self::validate) but also admits `lambda_p = 0`, which
    /// the simulator handles as a primary that never transmits.
    pub fn validate_for_simulation(&self) -> Result<()> {
        if !(self.lambda_p >= 0.0 && self.lambda_p < 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "lambda_p",
                value: self.lambda_p,
                reason: "must lie in [0, 1)",
            });
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.lambda_e >= 0.0 && self.lambda_e.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "lambda_e",
                value: self.lambda_e,
                reason: "must be non-negative and finite",
            });
        }
        check_prob("q", self.q)?;
        check_prob("P_MD", self.p_miss_detect)?;
        check_prob("P_FA", self.p_false_alarm)?;
        check_positive("P_p", self.p_primary)?;
        check_positive("P_max", self.p_max)?;
        if self.d_max.is_nan() || self.d_max < 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "D_max",
                value: self.d_max,
                reason: "must be at least one slot",
            });
        }
        self.radio.validate()?;
        self.links.validate()
    }

    /// Primary link success probability with the SU interfering at `su_power`.
    pub fn pu_success(&self, kind: TxDuration, su_power: f64) -> f64 {
        success_prob(
            kind,
            self.p_primary,
            su_power,
            self.links.p_to_dp,
            self.links.s_to_dp,
            &self.radio,
        )
    }

    /// Secondary link success probability; `pu_power` is `0.0` when the PU is idle.
    pub fn su_success(&self, kind: TxDuration, su_power: f64, pu_power: f64) -> f64 {
        success_prob(
            kind,
            su_power,
            pu_power,
            self.links.s_to_ds,
            self.links.p_to_ds,
            &self.radio,
        )
    }

    /// Primary success with no secondary interference.
    pub fn pu_alone(&self) -> f64 {
        self.pu_success(TxDuration::FullSlot, 0.0)
    }
}

/// Sensing/access probabilities and transmit powers of the secondary user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Policy {
    /// Probability of sensing at the start of a slot.
    pub alpha_s: f64,
    /// Access probability after sensing the channel free.
    pub alpha_f: f64,
    /// Access probability when not sensing.
    pub alpha_t: f64,
    /// Access probability after sensing the channel busy.
    pub alpha_b: f64,
    /// Access probability after overhearing a NACK.
    pub alpha_r: f64,
    /// Power when the PU is believed idle (unsensed or sensed free).
    pub ps1: f64,
    /// Power after sensing the channel busy.
    pub ps2: f64,
    /// Power after overhearing a NACK.
    pub ps3: f64,
}

impl Policy {
    pub const DIM: usize = 8;

    /// The SU never transmits.
    pub fn silent() -> Self {
        Self::default()
    }

    pub fn validate(&self, p_max: f64) -> Result<()> {
        check_prob("alpha_s", self.alpha_s)?;
        check_prob("alpha_f", self.alpha_f)?;
        check_prob("alpha_t", self.alpha_t)?;
        check_prob("alpha_b", self.alpha_b)?;
        check_prob("alpha_r", self.alpha_r)?;
        for (name, p) in [("Ps1", self.ps1), ("Ps2", self.ps2), ("Ps3", self.ps3)] {
            if !(0.0..=p_max).contains(&p) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: p,
                    reason: "must lie in [0, P_max]",
                });
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; Self::DIM] {
        [
            self.alpha_s,
            self.alpha_f,
            self.alpha_t,
            self.alpha_b,
            self.alpha_r,
            self.ps1,
            self.ps2,
            self.ps3,
        ]
    }

    pub fn from_array(x: [f64; Self::DIM]) -> Self {
        Self {
            alpha_s: x[0],
            alpha_f: x[1],
            alpha_t: x[2],
            alpha_b: x[3],
            alpha_r: x[4],
            ps1: x[5],
            ps2: x[6],
            ps3: x[7],
        }
    }

    /// Scale the four access probabilities (not the sensing probability) by
    /// `t`. Every success probability of the PU is affine in `t`.
    pub fn scale_access(&self, t: f64) -> Self {
        Self {
            alpha_f: self.alpha_f * t,
            alpha_t: self.alpha_t * t,
            alpha_b: self.alpha_b * t,
            alpha_r: self.alpha_r * t,
            ..*self
        }
    }

    pub fn is_silent(&self) -> bool {
        let unsensed = (1.0 - self.alpha_s) * self.alpha_t;
        let sensed = self.alpha_s * (self.alpha_f + self.alpha_b);
        unsensed == 0.0 && sensed == 0.0 && self.alpha_r == 0.0
    }
}
