//! The Dirichlet-Neumann operator `G(eta)(psi, b) = (d_y phi - grad eta . grad phi)|_{y = eta}`
//! of the fluid layer `-h < y < eta(x)` with `d_y phi = b` on the bottom, and
//! the surface velocity traces derived from it.

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{analytic_norm, apply_real_multiplier, dn_symbol, AnalyticIndex, PhysicalField, SpectralField};
use crate::strip::{build_geometry, solve_elliptic_from, EllipticOptions, StripField, SurfaceGeometry, VerticalGrid};

/// Surface traces produced by one elliptic solve.
#[derive(Debug, Clone)]
pub struct DNResult {
    /// `G(eta)(psi, b)`.
    pub g: SpectralField,
    /// Vertical velocity at the surface, `d_y phi|_{y=eta}`.
    pub b: SpectralField,
    /// Horizontal velocity at the surface, `grad_x phi|_{y=eta}`.
    pub v: Vec<SpectralField>,
    /// Potential in straightened coordinates.
    pub phi_strip: StripField,
    /// Bottom trace `phi(x, -h)`.
    pub phi_h: SpectralField,
    pub lap_phi_h: SpectralField,
    pub iterations: usize,
    pub contraction_ratio: f64,
}

fn real_values(u: &SpectralField) -> Vec<f64> {
    u.to_physical().real_values()
}

fn project(lat: &crate::spectral::Lattice, values: Vec<f64>) -> SpectralField {
    PhysicalField::from_real(lat, values).unwrap().to_spectral()
}

/// Solves the straightened problem `(Delta + R) u = 0`, `u(0) = psi`,
/// `d_z u(-h) = d_z rho(-h) b`, and evaluates the surface traces.
pub fn compute_dn(
    eta: &SpectralField,
    psi: &SpectralField,
    b: &SpectralField,
    vgrid: &VerticalGrid,
    opts: &EllipticOptions,
) -> Result<DNResult> {
    let geom = build_geometry(eta, vgrid)?;
    compute_dn_with(&geom, psi, b, opts, None)
}

/// [`compute_dn`] on a prebuilt geometry, optionally warm-started from a
/// previous strip potential.
pub fn compute_dn_with(
    geom: &SurfaceGeometry,
    psi: &SpectralField,
    b: &SpectralField,
    opts: &EllipticOptions,
    guess: Option<&StripField>,
) -> Result<DNResult> {
    let lat = psi.lattice();
    let vg = geom.vgrid();
    let nz = vg.nz();
    let dim = lat.dim();
    let bottom = geom.levels.last().unwrap();
    let bv = real_values(b);
    let theta = project(lat, (0..lat.n_points()).map(|i| bottom.dz_rho[i] * bv[i]).collect());
    let f = StripField::zeros(lat, vg);
    let sol = solve_elliptic_from(geom, &f, psi, &theta, opts, guess)?;
    let iterations = sol.iterations;
    let contraction_ratio = sol.contraction_ratio();
    let phi = sol.w;

    let top = &geom.levels[0];
    let uz = real_values(&phi.dz_at(0));
    let grad_psi: Vec<Vec<f64>> = (0..dim).map(|a| real_values(&psi.derivative(a))).collect();
    let n = lat.n_points();
    let mut g = vec![0.0; n];
    let mut bb = vec![0.0; n];
    let mut v = vec![vec![0.0; n]; dim];
    for i in 0..n {
        let zeta_dot: f64 = (0..dim).map(|a| top.grad_rho[a][i] * grad_psi[a][i]).sum();
        g[i] = top.big_a[i] * uz[i] - zeta_dot;
        bb[i] = uz[i] / top.dz_rho[i];
        for a in 0..dim {
            v[a][i] = grad_psi[a][i] - bb[i] * top.grad_rho[a][i];
        }
    }
    let phi_h = phi.level(nz - 1);
    Ok(DNResult {
        g: project(lat, g),
        b: project(lat, bb),
        v: v.into_iter().map(|c| project(lat, c)).collect(),
        lap_phi_h: phi_h.laplacian(),
        phi_h,
        iterations,
        contraction_ratio,
        phi_strip: phi,
    })
}

/// `d_y^2 phi` at the surface from the strip solution:
/// `u_zz / rho_z^2 - rho_zz u_z / rho_z^3` at `z = 0`.
pub fn strip_side_dyy(geom: &SurfaceGeometry, dn: &DNResult) -> SpectralField {
    let lat = dn.g.lattice();
    let top = &geom.levels[0];
    let d2 = geom.vgrid().d2();
    let mut uzz = vec![Complex64::new(0.0, 0.0); lat.n_modes()];
    for k in 0..geom.vgrid().nz() {
        for (o, c) in uzz.iter_mut().zip(dn.phi_strip.level_coeffs(k)) {
            *o += c * d2[(0, k)];
        }
    }
    let uzz = real_values(&SpectralField::from_coeffs(lat, uzz).unwrap());
    let uz = real_values(&dn.phi_strip.dz_at(0));
    let out = (0..lat.n_points())
        .map(|i| {
            let rz = top.dz_rho[i];
            uzz[i] / (rz * rz) - top.dzz_rho[i] * uz[i] / (rz * rz * rz)
        })
        .collect();
    project(lat, out)
}

/// Closed-form surface second derivatives from `(eta, B, V)`:
/// `d_y grad phi = grad B - ((grad B . zeta) zeta - (div V) zeta) / (1 + |zeta|^2)` and
/// `d_y^2 phi = (grad B . zeta - div V) / (1 + |zeta|^2)`.
pub fn surface_second_derivatives(
    eta: &SpectralField,
    b: &SpectralField,
    v: &[SpectralField],
) -> (Vec<SpectralField>, SpectralField) {
    let lat = eta.lattice();
    let dim = lat.dim();
    let zeta: Vec<Vec<f64>> = (0..dim).map(|a| real_values(&eta.derivative(a))).collect();
    let grad_b: Vec<Vec<f64>> = (0..dim).map(|a| real_values(&b.derivative(a))).collect();
    let div_v = real_values(&SpectralField::divergence(v));
    let n = lat.n_points();
    let mut dyy = vec![0.0; n];
    let mut dy_grad = vec![vec![0.0; n]; dim];
    for i in 0..n {
        let z2: f64 = (0..dim).map(|a| zeta[a][i] * zeta[a][i]).sum();
        let gbz: f64 = (0..dim).map(|a| grad_b[a][i] * zeta[a][i]).sum();
        let q = (gbz - div_v[i]) / (1.0 + z2);
        dyy[i] = q;
        for a in 0..dim {
            dy_grad[a][i] = grad_b[a][i] - q * zeta[a][i];
        }
    }
    (dy_grad.into_iter().map(|c| project(lat, c)).collect(), project(lat, dyy))
}

/// Radius of the resolved band, `2M/3`.
pub fn resolved_radius(lat: &crate::spectral::Lattice) -> f64 {
    2.0 * lat.max_mode() as f64 / 3.0
}

/// `|diff| / |reference|` over `|xi| <= 2M/3`, summed over components.
/// Falls back to the absolute norm when the reference vanishes.
pub fn band_relative(diff: &[SpectralField], reference: &[SpectralField]) -> f64 {
    let r = resolved_radius(diff[0].lattice());
    let num: f64 = diff.iter().map(|d| d.coeff_norm_within(r).powi(2)).sum::<f64>().sqrt();
    let den: f64 = reference.iter().map(|d| d.coeff_norm_within(r).powi(2)).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Residual of `grad G(eta)(psi, b) = G(eta)(V, grad b) - (V . grad) grad eta - (div V) grad eta`.
pub fn check_gradient_identity(
    eta: &SpectralField,
    psi: &SpectralField,
    b: &SpectralField,
    vgrid: &VerticalGrid,
    opts: &EllipticOptions,
) -> Result<f64> {
    let geom = build_geometry(eta, vgrid)?;
    let dn = compute_dn_with(&geom, psi, b, opts, None)?;
    let lat = eta.lattice();
    let dim = lat.dim();
    let zeta: Vec<Vec<f64>> = (0..dim).map(|a| real_values(&eta.derivative(a))).collect();
    let vv: Vec<Vec<f64>> = dn.v.iter().map(real_values).collect();
    let div_v = real_values(&SpectralField::divergence(&dn.v));
    let mut diffs = Vec::with_capacity(dim);
    let mut lhs_all = Vec::with_capacity(dim);
    for a in 0..dim {
        let lhs = dn.g.derivative(a);
        let g_va = compute_dn_with(&geom, &dn.v[a], &b.derivative(a), opts, None)?.g;
        let grad_zeta_a: Vec<Vec<f64>> = (0..dim).map(|c| real_values(&eta.derivative(a).derivative(c))).collect();
        let corr = (0..lat.n_points())
            .map(|i| {
                let adv: f64 = (0..dim).map(|c| vv[c][i] * grad_zeta_a[c][i]).sum();
                adv + div_v[i] * zeta[a][i]
            })
            .collect();
        let rhs = &g_va - &project(lat, corr);
        diffs.push(&lhs - &rhs);
        lhs_all.push(lhs);
    }
    Ok(band_relative(&diffs, &lhs_all))
}

/// Residual of `G(eta)(B, -Delta_x phi_h) = -div V`.
pub fn check_div_v_identity(
    eta: &SpectralField,
    psi: &SpectralField,
    b: &SpectralField,
    vgrid: &VerticalGrid,
    opts: &EllipticOptions,
) -> Result<f64> {
    let geom = build_geometry(eta, vgrid)?;
    let dn = compute_dn_with(&geom, psi, b, opts, None)?;
    let lhs = compute_dn_with(&geom, &dn.b, &(-&dn.lap_phi_h), opts, None)?.g;
    let div_v = SpectralField::divergence(&dn.v);
    Ok(band_relative(&[&lhs + &div_v], &[div_v]))
}

/// Measured difference `G(eta_1)(psi, b) - G(eta_2)(psi, b)` together with
/// the right-hand-side factors of the Lipschitz bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzProbe {
    /// `|G_1 - G_2|_{H^{lambda h, s - 1/2}}`.
    pub diff_norm: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// `|eta_1 - eta_2|_{H^{lambda h, s}}` and `..._{s + 1/2}`.
    pub eta_diff: [f64; 2],
}

/// `a(D)^{1/2} psi`.
pub fn sqrt_dn(psi: &SpectralField) -> SpectralField {
    let a = dn_symbol(psi.lattice());
    apply_real_multiplier(|xi| a(xi).sqrt(), psi)
}

#[allow(clippy::too_many_arguments)]
pub fn dn_lipschitz_probe(
    eta1: &SpectralField,
    eta2: &SpectralField,
    psi: &SpectralField,
    b: &SpectralField,
    vgrid: &VerticalGrid,
    lambda: f64,
    s: f64,
    opts: &EllipticOptions,
) -> Result<LipschitzProbe> {
    let h = psi.lattice().depth();
    let sig = lambda * h;
    let nrm = |u: &SpectralField, t: f64| analytic_norm(u, AnalyticIndex::new(sig, t)?);
    let g1 = compute_dn(eta1, psi, b, vgrid, opts)?.g;
    let g2 = compute_dn(eta2, psi, b, vgrid, opts)?.g;
    let diff_norm = nrm(&(&g1 - &g2), s - 0.5)?;
    let ap = sqrt_dn(psi);
    // psi_1 = psi_2, so each pair norm is twice the single norm
    let pair_eta = nrm(eta1, s + 0.5)? + nrm(eta2, s + 0.5)?;
    let pair_psi = |t: f64| -> Result<f64> { Ok(2.0 * nrm(&ap, t)?) };
    let bn = |t: f64| analytic_norm(b, AnalyticIndex::sobolev(t));
    let lambda1 = pair_eta * (pair_psi(s - 0.5)? + bn(s - 1.5)?) + pair_psi(s)? + bn(s - 0.5)?;
    let lambda2 = pair_psi(s - 1.0)? + bn(s - 1.5)?;
    let de = eta1 - eta2;
    Ok(LipschitzProbe {
        diff_norm,
        lambda1,
        lambda2,
        lambda3: pair_eta,
        eta_diff: [nrm(&de, s)?, nrm(&de, s + 0.5)?],
    })
}
