use serde::{Deserialize, Serialize};

use crate::dn::sqrt_dn;
use crate::spectral::SpectralField;

/// Decay rate of the Fourier coefficients, read as the width of the strip
/// of analyticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub sigma_est: f64,
    /// Shell range `[k_min, k_max]` used in the fit.
    pub fit_window: (f64, f64),
    pub rms_residual: f64,
    pub usable: bool,
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms)`.
pub fn fit_affine(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Angular frequency of a sampled phase: unwraps the phases (consecutive
/// samples are assumed less than `pi` apart) and returns the absolute slope
/// of the least-squares line through them.
pub fn phase_frequency(times: &[f64], phases: &[f64]) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut unwrapped = Vec::with_capacity(phases.len());
    let mut acc = 0.0;
    for (i, p) in phases.iter().enumerate() {
        if i > 0 {
            acc += (p - phases[i - 1] + PI).rem_euclid(TAU) - PI;
        }
        unwrapped.push(phases[0] + acc);
    }
    fit_affine(times, &unwrapped).1.abs()
}

/// Fits `ln A_k` against `k`, where `A_k` is the largest `|u_hat|` on the
/// shell `k <= |xi| < k + 1`. Shells below `k = 2`, above `2M/3`, or at or
/// under `noise_floor` are left out.
pub fn estimate_radius(u: &SpectralField, noise_floor: f64, min_shells: usize) -> RadiusEstimate {
    let lat = u.lattice();
    let top = (2 * lat.max_mode()) as f64 / 3.0;
    let nshell = top.floor() as usize + 1;
    let mut amax = vec![0.0f64; nshell];
    for (xi, c) in lat.modes().iter().zip(u.coeffs()) {
        let r = xi.norm();
        if r < top {
            let k = r.floor() as usize;
            amax[k] = amax[k].max(c.norm());
        }
    }
    let mut ks = Vec::new();
    let mut ls = Vec::new();
    for (k, &a) in amax.iter().enumerate().skip(2) {
        // the shell must lie inside the band
        if (k + 1) as f64 <= top + 1e-12 && a > noise_floor {
            ks.push(k as f64);
            ls.push(a.ln());
        }
    }
    if ks.len() < min_shells.max(2) {
        return RadiusEstimate { sigma_est: 0.0, fit_window: (0.0, 0.0), rms_residual: 0.0, usable: false };
    }
    let (_, slope, rms) = fit_affine(&ks, &ls);
    let sigma = -slope;
    RadiusEstimate {
        sigma_est: sigma.max(0.0),
        fit_window: (ks[0], *ks.last().unwrap()),
        rms_residual: rms,
        usable: sigma >= 0.0,
    }
}

/// `sqrt(g) eta_hat + i a(xi)^{1/2} psi_hat`; its modulus is invariant under
/// the linearized flow.
pub fn wave_amplitude(eta: &SpectralField, psi: &SpectralField) -> SpectralField {
    let g = eta.lattice().gravity();
    eta.scale(g.sqrt()).plus_i_times(&sqrt_dn(psi))
}
