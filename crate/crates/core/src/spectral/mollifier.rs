use super::field::SpectralField;
use crate::error::{Error, Result};

/// Smooth cutoff profile: 1 on `|y| <= 1`, 0 on `|y| >= 2`, and
/// `exp(1 - 1/(1 - (|y|-1)^2))` in between.
pub fn bump(y: f64) -> f64 {
    let a = y.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let t = a - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Frequency cutoff `J_n = chi(D / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MollifierSpec {
    n: u32,
}

impl MollifierSpec {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                key: "n".into(),
                reason: "mollifier scale must be positive".into(),
            });
        }
        Ok(MollifierSpec { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Symbol value at frequency magnitude `k`.
    pub fn symbol(&self, k: f64) -> f64 {
        bump(k / self.n as f64)
    }
}

pub fn mollify(u: &SpectralField, spec: &MollifierSpec) -> SpectralField {
    u.map_modes(true, |xi, c| c * spec.symbol(xi.norm()))
}
