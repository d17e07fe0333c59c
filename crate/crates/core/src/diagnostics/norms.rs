use serde::{Deserialize, Serialize};

use crate::dn::{sqrt_dn, DNResult};
use crate::error::Result;
use crate::evolution::BottomSource;
use crate::spectral::{analytic_norm, log_weighted_norm, AnalyticIndex, Complex64, SpectralField, Wavevector};

/// Norm of a vector field: root sum of squares of the component norms.
fn vector_norm(v: &[SpectralField], idx: AnalyticIndex) -> Result<f64> {
    let mut acc = 0.0;
    for c in v {
        acc += analytic_norm(c, idx)?.powi(2);
    }
    Ok(acc.sqrt())
}

/// Zeroes the coefficients with `|c| <= floor * max |c|`. With large
/// analytic weights, round-off in the tail would otherwise dominate a norm.
pub fn denoise(u: &SpectralField, floor: f64) -> SpectralField {
    cut_below(u, floor * u.max_abs())
}

fn cut_below(u: &SpectralField, cut: f64) -> SpectralField {
    if cut <= 0.0 {
        return u.clone();
    }
    let coeffs = u.coeffs().iter().map(|c| if c.norm() <= cut { Complex64::new(0.0, 0.0) } else { *c }).collect();
    SpectralField::from_coeffs(u.lattice(), coeffs).expect("finite coefficients")
}

/// The four terms `|eta|_{sigma, s+1/2}`, `|a(D)^{1/2} psi|_{sigma, s}`,
/// `|V|_{sigma, s}`, `|B|_{sigma, s}`. Coefficients below `floor` times the
/// largest coefficient of the four fields are dropped (0 keeps all); the
/// scale is shared so that a field passing through zero keeps its tail cut.
pub fn norms_snapshot(
    eta: &SpectralField,
    psi: &SpectralField,
    dn: &DNResult,
    sigma: f64,
    s: f64,
    floor: f64,
) -> Result<[f64; 4]> {
    let hi = AnalyticIndex::new(sigma, s + 0.5)?;
    let lo = AnalyticIndex::new(sigma, s)?;
    let ap = sqrt_dn(psi);
    let scale = dn.v.iter().chain([eta, &ap, &dn.b]).map(|f| f.max_abs()).fold(0.0, f64::max);
    let cut = floor * scale;
    let v: Vec<SpectralField> = dn.v.iter().map(|c| cut_below(c, cut)).collect();
    Ok([
        analytic_norm(&cut_below(eta, cut), hi)?,
        analytic_norm(&cut_below(&ap, cut), lo)?,
        vector_norm(&v, lo)?,
        analytic_norm(&cut_below(&dn.b, cut), lo)?,
    ])
}

/// Components of the data size: `N_s(b)` and the four surface norms at `sigma = lambda h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSize {
    pub ns_b: f64,
    pub surface: [f64; 4],
    pub total: f64,
}

/// Measured data size `N_s(b) + |eta_0| + |a^{1/2} psi_0| + |V_0| + |B_0|`.
pub fn measure_data_size(
    eta: &SpectralField,
    psi: &SpectralField,
    dn: &DNResult,
    source: &BottomSource,
    sigma: f64,
    s: f64,
    t_final: f64,
    floor: f64,
) -> Result<DataSize> {
    let surface = norms_snapshot(eta, psi, dn, sigma, s, floor)?;
    let ns_b = source.ns_norm(eta.lattice(), s, t_final)?;
    Ok(DataSize { ns_b, surface, total: ns_b + surface.iter().sum::<f64>() })
}

/// Surface unknowns in the form used by the energy estimate.
#[derive(Debug, Clone)]
pub struct ReformulatedState {
    pub zeta: Vec<SpectralField>,
    pub b: SpectralField,
    pub v: Vec<SpectralField>,
    /// `sqrt(g) zeta + i a(D)^{1/2} V`, one complex field per direction.
    pub u: Vec<SpectralField>,
    pub sigma: f64,
    pub s: f64,
}

fn weighted_sq(u: &[SpectralField], lw: impl Fn(&Wavevector) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for c in u {
        acc += log_weighted_norm(c, &lw)?.powi(2);
    }
    Ok(acc)
}

impl ReformulatedState {
    pub fn new(eta: &SpectralField, dn: &DNResult, sigma: f64, s: f64) -> Self {
        ReformulatedState::with_floor(eta, dn, sigma, s, 0.0)
    }

    /// As [`ReformulatedState::new`], dropping coefficients of `u` below
    /// `floor` times its largest coefficient over all components.
    pub fn with_floor(eta: &SpectralField, dn: &DNResult, sigma: f64, s: f64, floor: f64) -> Self {
        let g = eta.lattice().gravity();
        let zeta = eta.gradient();
        let u: Vec<SpectralField> =
            zeta.iter().zip(&dn.v).map(|(z, v)| z.scale(g.sqrt()).plus_i_times(&sqrt_dn(v))).collect();
        let cut = floor * u.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
        let u = u.iter().map(|c| cut_below(c, cut)).collect();
        ReformulatedState { zeta, b: dn.b.clone(), v: dn.v.clone(), u, sigma, s }
    }

    fn log_weight(&self, xi: &Wavevector, extra: f64) -> f64 {
        let br = xi.bracket();
        self.sigma * br + (self.s - 0.5 + extra) * br.ln()
    }

    /// `|U_s|^2_{L^2}` with `U_s = e^{sigma <D>} <D>^{s-1/2} u`.
    pub fn us_l2_sq(&self) -> Result<f64> {
        weighted_sq(&self.u, |xi| self.log_weight(xi, 0.0))
    }

    /// `|U_s|^2_{H^{1/2}}`.
    pub fn us_half_sq(&self) -> Result<f64> {
        weighted_sq(&self.u, |xi| self.log_weight(xi, 0.5))
    }

    /// `U_s` itself.
    pub fn us(&self) -> Vec<SpectralField> {
        self.u
            .iter()
            .map(|c| crate::spectral::apply_multiplier(|xi| self.log_weight(xi, 0.0).exp().into(), c))
            .collect()
    }
}

/// `E_s(t_i) = |U_s(t_i)|^2 + 2 K eps int_0^{t_i} |U_s|^2_{H^{1/2}}`, trapezoidal in time.
pub fn energy_es(times: &[f64], us_l2_sq: &[f64], us_half_sq: &[f64], k: f64, eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            integral += 0.5 * (times[i] - times[i - 1]) * (us_half_sq[i] + us_half_sq[i - 1]);
        }
        out.push(us_l2_sq[i] + 2.0 * k * eps * integral);
    }
    out
}

/// `<f, g> = (2 pi)^d Re sum f_hat conj(g_hat)`.
pub fn l2_pairing(f: &SpectralField, g: &SpectralField) -> f64 {
    let vol = f.lattice().volume();
    vol * f.coeffs().iter().zip(g.coeffs()).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
}

/// `H = 1/2 <psi, G(eta) psi> + 1/2 g <eta, eta>`; `dn` must be the unforced solve.
pub fn hamiltonian(eta: &SpectralField, psi: &SpectralField, dn: &DNResult) -> f64 {
    let g = eta.lattice().gravity();
    0.5 * l2_pairing(psi, &dn.g) + 0.5 * g * l2_pairing(eta, eta)
}

/// `int eta dx`.
pub fn mass(eta: &SpectralField) -> f64 {
    eta.integral()
}

/// Field with `u_hat(xi) = amp/2 e^{-radius |xi|}` off the mean: analytic in a
/// strip of half-width exactly `radius`.
pub fn analytic_profile(lat: &crate::spectral::Lattice, amp: f64, radius: f64) -> SpectralField {
    SpectralField::from_real_fn(lat, |xi| if xi.norm_sq() == 0 { 0.0 } else { 0.5 * amp * (-radius * xi.norm()).exp() })
}
