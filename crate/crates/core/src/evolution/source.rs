use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{analytic_norm, AnalyticIndex, Complex64, Lattice, SpectralField, Wavevector};

/// One forced Fourier mode of the bottom source,
/// `b_hat(k, t) = amp * env(t) * cos(omega t)` with `env(t) = exp(-((t - t0)/tau)^2)`
/// (`env = 1` when `tau` is absent). The `-k` coefficient is the conjugate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMode {
    pub k: [i64; 2],
    pub amp_re: f64,
    #[serde(default)]
    pub amp_im: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub omega: f64,
}

impl SourceMode {
    fn envelope(&self, t: f64) -> (f64, f64) {
        match self.tau {
            None => (1.0, 0.0),
            Some(tau) => {
                let y = (t - self.t0) / tau;
                let e = (-y * y).exp();
                (e, -2.0 * y / tau * e)
            }
        }
    }

    /// Time profile and its derivative.
    fn profile(&self, t: f64) -> (f64, f64) {
        let (e, de) = self.envelope(t);
        let (s, c) = (self.omega * t).sin_cos();
        (e * c, de * c - e * self.omega * s)
    }

    fn amp(&self) -> Complex64 {
        if self.k == [0, 0] {
            Complex64::new(self.amp_re, 0.0)
        } else {
            Complex64::new(self.amp_re, self.amp_im)
        }
    }
}

/// Bottom Neumann data `b(t, x)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BottomSource {
    #[default]
    Zero,
    Modal { modes: Vec<SourceMode> },
}

impl BottomSource {
    pub fn is_zero(&self) -> bool {
        match self {
            BottomSource::Zero => true,
            BottomSource::Modal { modes } => modes.iter().all(|m| m.amp_re == 0.0 && m.amp_im == 0.0),
        }
    }

    /// Rejects modes outside the lattice and non-finite parameters.
    pub fn check(&self, lat: &Lattice) -> Result<()> {
        let BottomSource::Modal { modes } = self else {
            return Ok(());
        };
        for m in modes {
            let xi = Wavevector { k: m.k };
            if lat.index_of(xi).is_none() {
                return Err(Error::InvalidParameter {
                    key: "source.k".into(),
                    reason: format!("mode {:?} is not on the lattice", m.k),
                });
            }
            let finite = [m.amp_re, m.amp_im, m.t0, m.omega].iter().all(|v| v.is_finite());
            if !finite || m.tau.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidParameter {
                    key: "source".into(),
                    reason: format!("mode {:?} has a non-finite parameter or tau <= 0", m.k),
                });
            }
        }
        Ok(())
    }

    fn assemble(&self, lat: &Lattice, t: f64, derivative: bool) -> SpectralField {
        let BottomSource::Modal { modes } = self else {
            return SpectralField::zeros(lat);
        };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); lat.n_modes()];
        for m in modes {
            let Some(i) = lat.index_of(Wavevector { k: m.k }) else {
                continue;
            };
            let (p, dp) = m.profile(t);
            let c = m.amp() * if derivative { dp } else { p };
            coeffs[i] += c;
            let j = lat.neg_index(i);
            if j != i {
                coeffs[j] += c.conj();
            }
        }
        SpectralField::from_coeffs(lat, coeffs).expect("finite source coefficients")
    }

    /// `b(t)`.
    pub fn eval(&self, lat: &Lattice, t: f64) -> SpectralField {
        self.assemble(lat, t, false)
    }

    /// `d_t b(t)`, in closed form.
    pub fn eval_dt(&self, lat: &Lattice, t: f64) -> SpectralField {
        self.assemble(lat, t, true)
    }

    /// Spatial mean of `b(t)`.
    pub fn mean(&self, t: f64) -> f64 {
        match self {
            BottomSource::Zero => 0.0,
            BottomSource::Modal { modes } => modes
                .iter()
                .filter(|m| m.k == [0, 0])
                .map(|m| m.amp_re * m.profile(t).0)
                .sum(),
        }
    }

    /// Shortest envelope width, used to pick quadrature resolution.
    fn min_tau(&self) -> Option<f64> {
        match self {
            BottomSource::Zero => None,
            BottomSource::Modal { modes } => modes.iter().filter_map(|m| m.tau).reduce(f64::min),
        }
    }

    fn max_omega(&self) -> f64 {
        match self {
            BottomSource::Zero => 0.0,
            BottomSource::Modal { modes } => modes.iter().map(|m| m.omega.abs()).fold(0.0, f64::max),
        }
    }

    /// Odd number of Simpson nodes resolving the envelopes and carriers on `[t0, t1]`.
    fn simpson_nodes(&self, t0: f64, t1: f64) -> usize {
        let len = (t1 - t0).abs();
        let mut per_unit = 40.0f64;
        if let Some(tau) = self.min_tau() {
            per_unit = per_unit.max(40.0 / tau);
        }
        per_unit = per_unit.max(10.0 * self.max_omega());
        let n = ((len * per_unit).ceil() as usize).clamp(200, 2_000_000);
        n + 1 + n % 2
    }

    /// `int_{t0}^{t1} mean(b) dt` by composite Simpson.
    pub fn mean_integral(&self, t0: f64, t1: f64) -> f64 {
        if matches!(self, BottomSource::Zero) || t1 == t0 {
            return 0.0;
        }
        simpson(t0, t1, self.simpson_nodes(t0, t1), |t| self.mean(t))
    }

    /// `N_s(b) = |b|_{L^inf H^{s+1/2}} + |d_t b|_{L^inf H^{s-1/2}} + |b|_{L^1 H^{s+1/2}}`
    /// on `[0, t_final]`, with sup and integral taken over Simpson nodes.
    pub fn ns_norm(&self, lat: &Lattice, s: f64, t_final: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let n = self.simpson_nodes(0.0, t_final).min(4001);
        let hi = AnalyticIndex::sobolev(s + 0.5);
        let lo = AnalyticIndex::sobolev(s - 0.5);
        let mut sup_b: f64 = 0.0;
        let mut sup_db: f64 = 0.0;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let t = t_final * i as f64 / (n - 1) as f64;
            let nb = analytic_norm(&self.eval(lat, t), hi)?;
            sup_b = sup_b.max(nb);
            sup_db = sup_db.max(analytic_norm(&self.eval_dt(lat, t), lo)?);
            vals.push(nb);
        }
        let l1 = simpson_samples(t_final, &vals);
        Ok(sup_b + sup_db + l1)
    }
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = (0..n).map(|i| f(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    simpson_samples(b - a, &vals)
}

/// Composite Simpson over an odd number of equispaced samples spanning `len`.
fn simpson_samples(len: f64, vals: &[f64]) -> f64 {
    let n = vals.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let h = len / (n - 1) as f64;
    let mut acc = vals[0] + vals[n - 1];
    for (i, v) in vals.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}
