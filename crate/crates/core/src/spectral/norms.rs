use super::field::SpectralField;
use super::lattice::Wavevector;
use crate::error::{Error, Result};

/// Largest exponent whose `exp` is finite in `f64`.
const LOG_MAX: f64 = 709.78;

/// Index `(sigma, s)` of the analytic Sobolev space `H^{sigma,s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticIndex {
    pub sigma: f64,
    pub s: f64,
}

impl AnalyticIndex {
    pub fn new(sigma: f64, s: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) || !s.is_finite() {
            return Err(Error::InvalidParameter {
                key: "sigma".into(),
                reason: format!("need finite sigma >= 0, got {sigma}"),
            });
        }
        Ok(AnalyticIndex { sigma, s })
    }

    /// Plain Sobolev index, `sigma = 0`.
    pub fn sobolev(s: f64) -> Self {
        AnalyticIndex { sigma: 0.0, s }
    }

    pub(crate) fn log_weight(&self, xi: &Wavevector) -> f64 {
        self.sigma * xi.norm() + self.s * xi.bracket().ln()
    }
}

/// `(sum_xi e^{2 sigma |xi|} <xi>^{2s} |c(xi)|^2)^{1/2}`.
pub fn analytic_norm(u: &SpectralField, idx: AnalyticIndex) -> Result<f64> {
    let top = idx.sigma * u.lattice().max_norm();
    if top > LOG_MAX {
        return Err(Error::Overflow {
            sigma: idx.sigma,
            xi_norm: u.lattice().max_norm(),
        });
    }
    log_weighted_norm(u, |xi| idx.log_weight(xi)).map_err(|_| Error::Overflow {
        sigma: idx.sigma,
        xi_norm: u.lattice().max_norm(),
    })
}

/// `(sum_xi w(xi)^2 |c(xi)|^2)^{1/2}` for a weight given through `ln w`.
///
/// Large weights are handled in log-sum-exp form; an error is returned only
/// when the norm itself is not representable.
pub fn log_weighted_norm(u: &SpectralField, log_w: impl Fn(&Wavevector) -> f64) -> Result<f64> {
    let terms: Vec<f64> = u
        .lattice()
        .modes()
        .iter()
        .zip(u.coeffs())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(xi, c)| 2.0 * (log_w(xi) + c.norm().ln()))
        .collect();
    let Some(peak) = terms.iter().cloned().reduce(f64::max) else {
        return Ok(0.0);
    };
    if peak.is_nan() {
        return Err(Error::Overflow { sigma: f64::NAN, xi_norm: f64::NAN });
    }
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    let log_norm = 0.5 * (peak + sum.ln());
    let out = log_norm.exp();
    if !out.is_finite() {
        return Err(Error::Overflow { sigma: f64::NAN, xi_norm: f64::NAN });
    }
    Ok(out)
}
