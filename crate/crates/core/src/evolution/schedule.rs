use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine radius schedule `sigma(t) = lambda h - K eps t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub lambda: f64,
    pub h: f64,
    pub k: f64,
    pub eps: f64,
}

impl RadiusSchedule {
    pub fn new(lambda: f64, h: f64, k: f64, eps: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter { key: "lambda".into(), reason: format!("need 0 < lambda < 1, got {lambda}") });
        }
        if !(h > 0.0) || !(k >= 0.0) || !(eps >= 0.0) {
            return Err(Error::InvalidParameter {
                key: "schedule".into(),
                reason: "need h > 0, K >= 0, eps >= 0".into(),
            });
        }
        Ok(RadiusSchedule { lambda, h, k, eps })
    }

    /// The unscaled form `lambda h - K t`.
    pub fn unit(lambda: f64, h: f64, k: f64) -> Result<Self> {
        RadiusSchedule::new(lambda, h, k, 1.0)
    }

    /// Raw affine value, negative past exhaustion.
    pub fn value(&self, t: f64) -> f64 {
        self.lambda * self.h - self.k * self.eps * t
    }

    /// `sigma(t)`, or `ScheduleExhausted` once it is negative.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let s = self.value(t);
        if s < 0.0 {
            return Err(Error::ScheduleExhausted { t, sigma: s });
        }
        Ok(s)
    }

    /// Root of the schedule, `lambda h / (K eps)`.
    pub fn exhaustion_time(&self) -> f64 {
        let rate = self.k * self.eps;
        if rate > 0.0 {
            self.lambda * self.h / rate
        } else {
            f64::INFINITY
        }
    }
}
