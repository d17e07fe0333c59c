use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicBool, Ordering};

use crate::dn::{compute_dn_with, DNResult};
use crate::error::{Error, Result};
use crate::spectral::{dn_symbol, mollify, Lattice, MollifierSpec, PhysicalField, SpectralField};
use crate::strip::{build_geometry, EllipticOptions, StripField, VerticalGrid};

use super::source::BottomSource;

/// Surface elevation and potential trace at time `t`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub eta: SpectralField,
    pub psi: SpectralField,
    cache: Option<(u64, DNResult)>,
    warm: Option<StripField>,
}

impl WaveState {
    pub fn new(t: f64, eta: SpectralField, psi: SpectralField) -> Result<Self> {
        if eta.lattice() != psi.lattice() {
            return Err(Error::LatticeMismatch);
        }
        if !eta.is_hermitian() || !psi.is_hermitian() {
            return Err(Error::InvalidParameter {
                key: "state".into(),
                reason: "eta and psi must be real fields".into(),
            });
        }
        Ok(WaveState { t, eta, psi, cache: None, warm: None })
    }

    pub fn rest(lat: &Lattice) -> Self {
        WaveState::new(0.0, SpectralField::zeros(lat), SpectralField::zeros(lat)).unwrap()
    }

    pub fn lattice(&self) -> &Lattice {
        self.eta.lattice()
    }

    /// Hash of `t` and every coefficient bit of `eta` and `psi`.
    pub fn content_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.t.to_bits().hash(&mut h);
        for c in self.eta.coeffs().iter().chain(self.psi.coeffs()) {
            c.re.to_bits().hash(&mut h);
            c.im.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// The cached DN result, if it was computed for the current content.
    pub fn cached_dn(&self) -> Option<&DNResult> {
        match &self.cache {
            Some((h, dn)) if *h == self.content_hash() => Some(dn),
            _ => None,
        }
    }

    pub fn attach_dn(&mut self, dn: DNResult) {
        self.cache = Some((self.content_hash(), dn));
    }

    /// Strip potential of the last stage, used to warm-start the next solve.
    pub fn warm_start(&self) -> Option<&StripField> {
        self.warm.as_ref()
    }

    pub fn set_warm_start(&mut self, w: Option<StripField>) {
        self.warm = w;
    }

    fn is_finite(&self) -> bool {
        self.eta.max_abs().is_finite() && self.psi.max_abs().is_finite()
    }
}

/// Everything the right-hand side needs besides the state.
#[derive(Debug)]
pub struct Model {
    pub vgrid: VerticalGrid,
    pub source: BottomSource,
    pub mollifier: Option<MollifierSpec>,
    pub elliptic: EllipticOptions,
    /// CFL factor against `sqrt(g a(xi_max))`.
    pub cfl: f64,
    warned: AtomicBool,
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Model::new(self.vgrid.clone(), self.source.clone(), self.mollifier, self.elliptic, self.cfl)
    }
}

/// Time derivatives together with the DN solve they came from.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub deta: SpectralField,
    pub dpsi: SpectralField,
    pub dn: DNResult,
}

fn values(u: &SpectralField) -> Vec<f64> {
    u.to_physical().real_values()
}

fn project(lat: &Lattice, v: Vec<f64>) -> SpectralField {
    PhysicalField::from_real(lat, v).expect("finite physical values").to_spectral()
}

/// `-1/2 |grad psi|^2 + N^2 / (2 (1 + |grad eta|^2))` with `N = G + grad eta . grad psi`.
pub fn psi_nonlinearity(eta: &SpectralField, psi: &SpectralField, dn: &DNResult) -> SpectralField {
    let lat = eta.lattice();
    let zeta: Vec<Vec<f64>> = eta.gradient().iter().map(values).collect();
    let gpsi: Vec<Vec<f64>> = psi.gradient().iter().map(values).collect();
    let g = values(&dn.g);
    let out = (0..lat.n_points())
        .map(|i| {
            let z2: f64 = zeta.iter().map(|z| z[i] * z[i]).sum();
            let p2: f64 = gpsi.iter().map(|p| p[i] * p[i]).sum();
            let zp: f64 = zeta.iter().zip(&gpsi).map(|(z, p)| z[i] * p[i]).sum();
            let n = g[i] + zp;
            -0.5 * p2 + n * n / (2.0 * (1.0 + z2))
        })
        .collect();
    project(lat, out)
}

/// The same nonlinearity from the surface traces:
/// `-1/2 |V + B grad eta|^2 + 1/2 (1 + |grad eta|^2) B^2`.
pub fn psi_nonlinearity_traces(eta: &SpectralField, dn: &DNResult) -> SpectralField {
    let lat = eta.lattice();
    let zeta: Vec<Vec<f64>> = eta.gradient().iter().map(values).collect();
    let v: Vec<Vec<f64>> = dn.v.iter().map(values).collect();
    let b = values(&dn.b);
    let out = (0..lat.n_points())
        .map(|i| {
            let z2: f64 = zeta.iter().map(|z| z[i] * z[i]).sum();
            let w2: f64 = zeta.iter().zip(&v).map(|(z, v)| (v[i] + b[i] * z[i]).powi(2)).sum();
            -0.5 * w2 + 0.5 * (1.0 + z2) * b[i] * b[i]
        })
        .collect();
    project(lat, out)
}

/// Largest step with `dt sqrt(g a(xi_max)) <= cfl`.
pub fn stable_dt(lat: &Lattice, cfl: f64) -> f64 {
    let a = dn_symbol(lat);
    let kmax = lat.modes().iter().map(|xi| a(xi)).fold(0.0, f64::max);
    cfl / (lat.gravity() * kmax).sqrt()
}

impl Model {
    pub fn new(
        vgrid: VerticalGrid,
        source: BottomSource,
        mollifier: Option<MollifierSpec>,
        elliptic: EllipticOptions,
        cfl: f64,
    ) -> Self {
        Model { vgrid, source, mollifier, elliptic, cfl, warned: AtomicBool::new(false) }
    }

    /// Unforced, unmollified model with default solver settings.
    pub fn free(vgrid: VerticalGrid) -> Self {
        let opts = EllipticOptions { report_residual: false, ..EllipticOptions::default() };
        Model::new(vgrid, BottomSource::Zero, None, opts, 0.5)
    }

    fn apply_j(&self, u: SpectralField) -> SpectralField {
        match &self.mollifier {
            Some(j) => mollify(&u, j),
            None => u,
        }
    }

    /// `G(eta)(psi, b(t))` and traces, optionally warm-started.
    pub fn dn_at(
        &self,
        t: f64,
        eta: &SpectralField,
        psi: &SpectralField,
        guess: Option<&StripField>,
    ) -> Result<DNResult> {
        let geom = build_geometry(eta, &self.vgrid)?;
        let b = self.source.eval(eta.lattice(), t);
        compute_dn_with(&geom, psi, &b, &self.elliptic, guess)
    }

    /// Fills the state's DN cache if it is stale.
    pub fn ensure_dn(&self, state: &mut WaveState) -> Result<()> {
        if state.cached_dn().is_none() {
            let dn = self.dn_at(state.t, &state.eta, &state.psi, state.warm.as_ref())?;
            state.attach_dn(dn);
        }
        Ok(())
    }

    /// Right-hand side from a DN result already computed for `(eta, psi)`.
    pub fn tendency_from(&self, eta: &SpectralField, psi: &SpectralField, dn: DNResult) -> Tendency {
        let g = eta.lattice().gravity();
        let dpsi = psi_nonlinearity(eta, psi, &dn).axpy(-g, eta);
        Tendency { deta: self.apply_j(dn.g.clone()), dpsi: self.apply_j(dpsi), dn }
    }

    pub fn tendency(
        &self,
        t: f64,
        eta: &SpectralField,
        psi: &SpectralField,
        guess: Option<&StripField>,
    ) -> Result<Tendency> {
        let dn = self.dn_at(t, eta, psi, guess)?;
        Ok(self.tendency_from(eta, psi, dn))
    }

    /// `(d_t eta, d_t psi)` at `state`, reusing its DN cache.
    pub fn rhs(&self, state: &WaveState) -> Result<(SpectralField, SpectralField)> {
        let tend = match state.cached_dn() {
            Some(dn) => self.tendency_from(&state.eta, &state.psi, dn.clone()),
            None => self.tendency(state.t, &state.eta, &state.psi, state.warm.as_ref())?,
        };
        Ok((tend.deta, tend.dpsi))
    }

    /// Classical fourth-order Runge-Kutta step; `b` is evaluated at the stage times.
    pub fn step_rk4(&self, state: &WaveState, dt: f64) -> Result<WaveState> {
        let lat = state.lattice();
        if dt.abs() > stable_dt(lat, self.cfl) * (1.0 + 1e-12) && !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "dt = {dt:e} exceeds the CFL bound {:e} (factor {})",
                stable_dt(lat, self.cfl),
                self.cfl
            );
        }
        let (t, eta, psi) = (state.t, &state.eta, &state.psi);
        let k1 = match state.cached_dn() {
            Some(dn) => self.tendency_from(eta, psi, dn.clone()),
            None => self.tendency(t, eta, psi, state.warm.as_ref())?,
        };
        let half = 0.5 * dt;
        let e2 = eta.axpy(half, &k1.deta);
        let p2 = psi.axpy(half, &k1.dpsi);
        let k2 = self.tendency(t + half, &e2, &p2, Some(&k1.dn.phi_strip))?;
        let e3 = eta.axpy(half, &k2.deta);
        let p3 = psi.axpy(half, &k2.dpsi);
        let k3 = self.tendency(t + half, &e3, &p3, Some(&k2.dn.phi_strip))?;
        let e4 = eta.axpy(dt, &k3.deta);
        let p4 = psi.axpy(dt, &k3.dpsi);
        let k4 = self.tendency(t + dt, &e4, &p4, Some(&k3.dn.phi_strip))?;
        let w = dt / 6.0;
        let combine = |u: &SpectralField, a: &SpectralField, b: &SpectralField, c: &SpectralField, d: &SpectralField| {
            u.axpy(w, a).axpy(2.0 * w, b).axpy(2.0 * w, c).axpy(w, d)
        };
        let next = WaveState {
            t: t + dt,
            eta: combine(eta, &k1.deta, &k2.deta, &k3.deta, &k4.deta),
            psi: combine(psi, &k1.dpsi, &k2.dpsi, &k3.dpsi, &k4.dpsi),
            cache: None,
            warm: Some(k4.dn.phi_strip),
        };
        if !next.is_finite() {
            return Err(Error::BlowUp { t: t + dt, reason: "non-finite coefficients".into() });
        }
        Ok(next)
    }
}

/// `(d_t eta, d_t psi)` for the system with optional frequency cutoff.
pub fn rhs(
    state: &WaveState,
    source: &BottomSource,
    mollifier: Option<&MollifierSpec>,
    vgrid: &VerticalGrid,
) -> Result<(SpectralField, SpectralField)> {
    let opts = EllipticOptions { report_residual: false, ..EllipticOptions::default() };
    Model::new(vgrid.clone(), source.clone(), mollifier.copied(), opts, 0.5).rhs(state)
}

/// One RK4 step of [`rhs`].
pub fn step_rk4(
    state: &WaveState,
    dt: f64,
    source: &BottomSource,
    mollifier: Option<&MollifierSpec>,
    vgrid: &VerticalGrid,
) -> Result<WaveState> {
    let opts = EllipticOptions { report_residual: false, ..EllipticOptions::default() };
    Model::new(vgrid.clone(), source.clone(), mollifier.copied(), opts, 0.5).step_rk4(state, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Wavevector;

    fn setup(m: usize) -> (Lattice, Model) {
        let lat = Lattice::new(1, m, 1.0, 1.0).unwrap();
        (lat, Model::free(VerticalGrid::new(32, 1.0).unwrap()))
    }

    #[test]
    fn rest_state_is_stationary() {
        let (lat, model) = setup(16);
        let s = WaveState::rest(&lat);
        let (de, dp) = model.rhs(&s).unwrap();
        assert_eq!(de.max_abs(), 0.0);
        assert_eq!(dp.max_abs(), 0.0);
        let next = model.step_rk4(&s, 0.05).unwrap();
        assert_eq!(next.eta.max_abs(), 0.0);
        assert_eq!(next.psi.max_abs(), 0.0);
    }

    #[test]
    fn linearized_elevation_forcing() {
        let (lat, model) = setup(16);
        let eps = 1e-6;
        let eta = SpectralField::cosine(&lat, Wavevector::new1(1), eps);
        let s = WaveState::new(0.0, eta.clone(), SpectralField::zeros(&lat)).unwrap();
        let (de, dp) = model.rhs(&s).unwrap();
        assert!(de.max_abs() < 1e-15);
        let expect = eta.scale(-1.0);
        assert!((&dp - &expect).coeff_norm() < 1e-4 * expect.coeff_norm());
    }

    #[test]
    fn cache_follows_content() {
        let (lat, model) = setup(16);
        let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 0.01);
        let mut s = WaveState::new(0.0, eta, SpectralField::cosine(&lat, Wavevector::new1(2), 0.01)).unwrap();
        assert!(s.cached_dn().is_none());
        model.ensure_dn(&mut s).unwrap();
        assert!(s.cached_dn().is_some());
        s.t = 0.5;
        assert!(s.cached_dn().is_none());
    }

    #[test]
    fn mollified_rhs_vanishes_beyond_cutoff() {
        let lat = Lattice::new(1, 32, 1.0, 1.0).unwrap();
        let j = MollifierSpec::new(6).unwrap();
        let model = Model::new(
            VerticalGrid::new(32, 1.0).unwrap(),
            BottomSource::Zero,
            Some(j),
            EllipticOptions::default(),
            0.5,
        );
        let eta = SpectralField::from_real_fn(&lat, |xi| 0.01 * (-0.3 * xi.norm()).exp());
        let psi = SpectralField::from_real_fn(&lat, |xi| 0.02 * (-0.4 * xi.norm()).exp());
        let s = WaveState::new(0.0, eta, psi).unwrap();
        let (de, dp) = model.rhs(&s).unwrap();
        for (xi, (a, b)) in lat.modes().iter().zip(de.coeffs().iter().zip(dp.coeffs())) {
            if xi.norm() >= 12.0 {
                assert_eq!(a.norm(), 0.0);
                assert_eq!(b.norm(), 0.0);
            }
        }
    }

    #[test]
    fn stable_dt_uses_largest_symbol() {
        let lat = Lattice::new(1, 64, 1.0, 1.0).unwrap();
        let a = 64.0 * (64.0f64).tanh();
        assert!((stable_dt(&lat, 0.5) - 0.5 / a.sqrt()).abs() < 1e-15);
    }
}
