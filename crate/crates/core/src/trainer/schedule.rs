use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the geometric warmup.
pub const WARMUP_STEPS: f64 = 1000.0;

/// Geometric warmup from `beta` to `alpha` over [`WARMUP_STEPS`], then
/// `alpha·(1 + cos(π·s/s0))` down to zero at `s0`. The two pieces are not
/// continuous at the switch: the decay branch starts near `2·alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub alpha: f64,
    pub beta: f64,
    pub s0: f64,
}

impl Schedule {
    pub fn new(alpha: f64, beta: f64, s0: f64) -> Result<Self> {
        let sched = Self { alpha, beta, s0 };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= self.alpha && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "schedule needs 0 < beta <= alpha, got beta = {}, alpha = {}",
                self.beta, self.alpha
            )));
        }
        if !(self.s0 > WARMUP_STEPS && self.s0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "s0 must exceed {WARMUP_STEPS}, got {}",
                self.s0
            )));
        }
        Ok(())
    }

    /// `beta·(alpha/beta)^(s/1000)`, written so both endpoints are exact.
    pub fn warmup_rate(&self, s: f64) -> f64 {
        let frac = s / WARMUP_STEPS;
        self.beta.powf(1.0 - frac) * self.alpha.powf(frac)
    }

    pub fn decay_rate(&self, s: f64) -> f64 {
        self.alpha * (1.0 + (std::f64::consts::PI * s / self.s0).cos())
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 1e-4,
            s0: 28_600.0,
        }
    }
}

/// Rate at step `s`, `0 <= s <= s0`.
pub fn learning_rate(s: f64, sched: &Schedule) -> Result<f64> {
    if !(0.0..=sched.s0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "step {s} outside [0, {}]",
            sched.s0
        )));
    }
    Ok(if s < WARMUP_STEPS {
        sched.warmup_rate(s)
    } else {
        sched.decay_rate(s)
    })
}
