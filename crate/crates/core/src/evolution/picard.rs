use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{analytic_norm, AnalyticIndex, SpectralField};
use crate::strip::StripField;

use super::state::Model;

/// Chebyshev-Gauss-Lobatto times on `[0, t_final]` (ascending) and the matrix
/// `S` with `(S f)_i = int_0^{t_i} p(t) dt` for the interpolant `p` of `f`.
/// The last row holds the Clenshaw-Curtis weights.
pub fn cumulative_quadrature(n: usize, t_final: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert!(n >= 2, "need at least two time nodes");
    let nn = n - 1;
    // x_i = -cos(pi i / N) ascending on [-1, 1]
    let x: Vec<f64> = (0..n).map(|i| -(PI * i as f64 / nn as f64).cos()).collect();
    let times = x.iter().map(|&xi| 0.5 * t_final * (1.0 + xi)).collect();
    let mut s = vec![vec![0.0; n]; n];
    for j in 0..n {
        // Chebyshev coefficients of the cardinal function e_j
        let cj = if j == 0 || j == nn { 2.0 } else { 1.0 };
        let c: Vec<f64> = (0..n)
            .map(|k| {
                let ck = if k == 0 || k == nn { 2.0 } else { 1.0 };
                let tk = (k as f64 * (x[j]).acos()).cos();
                2.0 / (nn as f64 * cj * ck) * tk
            })
            .collect();
        // antiderivative coefficients
        let mut d = vec![0.0; n + 1];
        for (k, &ck) in c.iter().enumerate() {
            match k {
                0 => d[1] += ck,
                1 => d[2] += ck / 4.0,
                _ => {
                    d[k + 1] += ck / (2.0 * (k + 1) as f64);
                    d[k - 1] -= ck / (2.0 * (k - 1) as f64);
                }
            }
        }
        let eval = |xv: f64| -> f64 {
            let th = xv.clamp(-1.0, 1.0).acos();
            d.iter().enumerate().map(|(k, dk)| dk * (k as f64 * th).cos()).sum()
        };
        let base = eval(-1.0);
        for i in 0..n {
            s[i][j] = 0.5 * t_final * (eval(x[i]) - base);
        }
    }
    (times, s)
}

/// Result of [`picard_solve`].
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub times: Vec<f64>,
    /// Sampled `(eta, psi)` path of every iterate, starting with the constant
    /// initial path.
    pub iterates: Vec<Vec<(SpectralField, SpectralField)>>,
    /// `sup_t |iterate_{nu+1} - iterate_nu|` in `H^{0,s}`, one entry per sweep.
    pub differences: Vec<f64>,
    /// Successive ratios of `differences`.
    pub ratios: Vec<f64>,
    /// `m_nu(T)` of each iterate, with `sigma(t) = lambda h (1 - t / T)`.
    pub energies: Vec<f64>,
}

impl PicardResult {
    pub fn final_path(&self) -> &[(SpectralField, SpectralField)] {
        self.iterates.last().unwrap()
    }
}

/// Options of [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub n_time_nodes: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    /// Sobolev index of the difference norm.
    pub s: f64,
    /// Radius fraction of the energy `m_nu`.
    pub lambda: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { n_time_nodes: 17, max_sweeps: 40, tol: 1e-12, s: 4.0, lambda: 0.5 }
    }
}

fn state_norm(eta: &SpectralField, psi: &SpectralField, idx: AnalyticIndex) -> Result<f64> {
    Ok(analytic_norm(eta, idx)?.hypot(analytic_norm(psi, idx)?))
}

/// `m_nu(T) = |eta(T)|^2 + |psi(T)|^2 + 2K int_0^T (|eta|^2 + |psi|^2)_{s+1/2}` in the
/// analytic norms with `sigma(t) = lambda h - K t`, `K = lambda h / T`.
fn energy(times: &[f64], weights: &[f64], path: &[(SpectralField, SpectralField)], o: &PicardOptions) -> Result<f64> {
    let t_final = *times.last().unwrap();
    let h = path[0].0.lattice().depth();
    let k = o.lambda * h / t_final;
    let sig = |t: f64| (o.lambda * h - k * t).max(0.0);
    let (e_t, p_t) = path.last().unwrap();
    let idx = AnalyticIndex::new(sig(t_final), o.s)?;
    let mut m = state_norm(e_t, p_t, idx)?.powi(2);
    for ((t, w), (e, p)) in times.iter().zip(weights).zip(path) {
        m += 2.0 * k * w * state_norm(e, p, AnalyticIndex::new(sig(*t), o.s + 0.5)?)?.powi(2);
    }
    Ok(m)
}

/// Picard iteration `eta_{nu+1}(t) = eta_0 + int_0^t G(eta_nu)(psi_nu, b)` and the
/// analogous update of `psi`, sampled at Gauss-Lobatto times.
pub fn picard_solve(
    eta0: &SpectralField,
    psi0: &SpectralField,
    model: &Model,
    t_final: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter { key: "T".into(), reason: "must be positive".into() });
    }
    let n = opts.n_time_nodes;
    let (times, s) = cumulative_quadrature(n, t_final);
    let weights = s[n - 1].clone();
    let sob = AnalyticIndex::sobolev(opts.s);
    let mut path: Vec<(SpectralField, SpectralField)> = vec![(eta0.clone(), psi0.clone()); n];
    let mut guesses: Vec<Option<StripField>> = vec![None; n];
    let mut result = PicardResult {
        times: times.clone(),
        iterates: vec![path.clone()],
        differences: Vec::new(),
        ratios: Vec::new(),
        energies: vec![energy(&times, &weights, &path, opts)?],
    };
    for sweep in 1..=opts.max_sweeps {
        let mut deta = Vec::with_capacity(n);
        let mut dpsi = Vec::with_capacity(n);
        for (i, (e, p)) in path.iter().enumerate() {
            let tend = model.tendency(times[i], e, p, guesses[i].as_ref())?;
            deta.push(tend.deta);
            dpsi.push(tend.dpsi);
            guesses[i] = Some(tend.dn.phi_strip);
        }
        let mut next = Vec::with_capacity(n);
        let mut diff: f64 = 0.0;
        for i in 0..n {
            let mut e = eta0.clone();
            let mut p = psi0.clone();
            for j in 0..n {
                if s[i][j] != 0.0 {
                    e = e.axpy(s[i][j], &deta[j]);
                    p = p.axpy(s[i][j], &dpsi[j]);
                }
            }
            diff = diff.max(state_norm(&(&e - &path[i].0), &(&p - &path[i].1), sob)?);
            next.push((e, p));
        }
        path = next;
        if let Some(prev) = result.differences.last() {
            if *prev > 0.0 {
                result.ratios.push(diff / prev);
            }
        }
        result.differences.push(diff);
        result.energies.push(energy(&times, &weights, &path, opts)?);
        result.iterates.push(path.clone());
        log::debug!("picard sweep {sweep}: difference {diff:e}");
        if !diff.is_finite() {
            return Err(Error::NoContraction { iteration: sweep, ratio: f64::INFINITY });
        }
        if diff < opts.tol {
            return Ok(result);
        }
    }
    let last_ratio = result.ratios.last().copied().unwrap_or(f64::INFINITY);
    if result.ratios.iter().all(|&r| r >= 0.9) {
        return Err(Error::NoContraction { iteration: opts.max_sweeps, ratio: last_ratio });
    }
    Err(Error::NotConverged {
        iterations: opts.max_sweeps,
        tol: opts.tol,
        last: *result.differences.last().unwrap(),
    })
}
