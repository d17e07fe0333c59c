use std::collections::HashMap;

use rustfft::num_complex::Complex64;

use super::field::StripField;
use super::geometry::SurfaceGeometry;
use super::vgrid::VerticalGrid;
use crate::error::{Error, Result};
use crate::spectral::{log_weighted_norm, PhysicalField, SpectralField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Harmonic extension of `psi` with vanishing Neumann data at the bottom:
/// `cosh(|xi|(z + h)) / cosh(|xi| h)` per mode, written with decaying
/// exponentials only.
pub fn lift_dirichlet(psi: &SpectralField, vgrid: &VerticalGrid) -> StripField {
    let lat = psi.lattice();
    let h = vgrid.depth();
    let nm = lat.n_modes();
    let mut coeffs = Vec::with_capacity(nm * vgrid.nz());
    for &z in vgrid.nodes() {
        for (xi, c) in lat.modes().iter().zip(psi.coeffs()) {
            let k = xi.norm();
            let f = ((z * k).exp() + (-2.0 * h * k - z * k).exp()) / (1.0 + (-2.0 * h * k).exp());
            coeffs.push(c * f);
        }
    }
    StripField::from_raw(lat, vgrid, coeffs, psi.is_hermitian())
}

/// Discrete `Delta_{x,z} w`.
pub fn laplacian(w: &StripField) -> StripField {
    &w.dzz() + &w.laplacian_x()
}

fn physical(u: &SpectralField) -> Vec<Complex64> {
    u.to_physical().values().to_vec()
}

fn to_spectral(lat: &crate::spectral::Lattice, values: Vec<Complex64>) -> SpectralField {
    PhysicalField::from_complex(lat, values).unwrap().to_spectral()
}

/// `R w` in non-divergence form, `a w_zz + b Delta_x w + c . grad_x w_z - d w_z`.
pub fn apply_r(geom: &SurfaceGeometry, w: &StripField) -> StripField {
    let lat = w.lattice().clone();
    if geom.is_flat() {
        return StripField::zeros(&lat, w.vgrid());
    }
    if !w.is_hermitian() {
        return apply_r_complex(geom, w);
    }
    let dim = lat.dim();
    let nm = lat.n_modes();
    let npts = lat.n_points();
    let wz = w.dz();
    let wzz = w.dzz();
    let modes = lat.modes();
    let mut lap = vec![ZERO; nm];
    let mut dwz = vec![vec![ZERO; nm]; dim];
    let mut out = vec![ZERO; nm * w.nz()];
    let mut pending: Option<(usize, Vec<f64>)> = None;
    for (j, g) in geom.levels.iter().enumerate() {
        let wl = w.level_coeffs(j);
        let wzl = wz.level_coeffs(j);
        for i in 0..nm {
            lap[i] = wl[i] * -(modes[i].norm_sq() as f64);
            for a in 0..dim {
                dwz[a][i] = wzl[i] * Complex64::new(0.0, modes[i].component(a));
            }
        }
        // real fields travel in pairs through one complex transform
        let p1 = lat.synthesize_pair(wzz.level_coeffs(j), &lap);
        let p2 = lat.synthesize_pair(wzl, &dwz[0]);
        let p3 = if dim == 2 { Some(lat.synthesize(&dwz[1])) } else { None };
        let mut vals = vec![0.0; npts];
        for i in 0..npts {
            let mut v = p1[i].re * g.coef_a[i] + p1[i].im * g.coef_b[i] - p2[i].re * g.coef_d[i]
                - 2.0 * g.grad_rho[0][i] * p2[i].im;
            if let Some(p3) = &p3 {
                v -= 2.0 * g.grad_rho[1][i] * p3[i].re;
            }
            vals[i] = v;
        }
        match pending.take() {
            None => pending = Some((j, vals)),
            Some((jp, prev)) => {
                let packed: Vec<Complex64> = prev.iter().zip(&vals).map(|(x, y)| Complex64::new(*x, *y)).collect();
                let (x, y) = lat.analyze_pair(&packed);
                out[jp * nm..(jp + 1) * nm].copy_from_slice(&x);
                out[j * nm..(j + 1) * nm].copy_from_slice(&y);
            }
        }
    }
    if let Some((jp, prev)) = pending {
        let packed: Vec<Complex64> = prev.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let (x, _) = lat.analyze_pair(&packed);
        out[jp * nm..(jp + 1) * nm].copy_from_slice(&x);
    }
    StripField::from_raw(&lat, w.vgrid(), out, true)
}

fn apply_r_complex(geom: &SurfaceGeometry, w: &StripField) -> StripField {
    let lat = w.lattice().clone();
    let dim = lat.dim();
    let wz = w.dz();
    let wzz = w.dzz();
    let lap = w.laplacian_x();
    let mut levels = Vec::with_capacity(w.nz());
    for (j, g) in geom.levels.iter().enumerate() {
        let wzz_p = physical(&wzz.level(j));
        let lap_p = physical(&lap.level(j));
        let wz_l = wz.level(j);
        let wz_p = physical(&wz_l);
        let grad_wz: Vec<Vec<Complex64>> = (0..dim).map(|a| physical(&wz_l.derivative(a))).collect();
        let out: Vec<Complex64> = (0..lat.n_points())
            .map(|i| {
                let mut v = wzz_p[i] * g.coef_a[i] + lap_p[i] * g.coef_b[i] - wz_p[i] * g.coef_d[i];
                for a in 0..dim {
                    v -= grad_wz[a][i] * (2.0 * g.grad_rho[a][i]);
                }
                v
            })
            .collect();
        levels.push(to_spectral(&lat, out));
    }
    StripField::from_levels(w.vgrid(), &levels).unwrap()
}

/// `R w` evaluated from the divergence form
/// `d_z(A w_z - grad rho . grad w) + div(d_z rho grad w - w_z grad rho) - Delta_{x,z} w`.
/// Independent of [`apply_r`]; used to cross-check it.
pub fn apply_div_form(geom: &SurfaceGeometry, w: &StripField) -> StripField {
    let lat = w.lattice().clone();
    let dim = lat.dim();
    let wz = w.dz();
    let mut vflux = Vec::with_capacity(w.nz());
    let mut hflux: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(w.nz()); dim];
    for (j, g) in geom.levels.iter().enumerate() {
        let wl = w.level(j);
        let wz_p = physical(&wz.level(j));
        let grad_w: Vec<Vec<Complex64>> = (0..dim).map(|a| physical(&wl.derivative(a))).collect();
        let p: Vec<Complex64> = (0..lat.n_points())
            .map(|i| {
                let mut v = wz_p[i] * g.big_a[i];
                for a in 0..dim {
                    v -= grad_w[a][i] * g.grad_rho[a][i];
                }
                v
            })
            .collect();
        vflux.push(to_spectral(&lat, p));
        for a in 0..dim {
            let q: Vec<Complex64> = (0..lat.n_points())
                .map(|i| grad_w[a][i] * g.dz_rho[i] - wz_p[i] * g.grad_rho[a][i])
                .collect();
            hflux[a].push(to_spectral(&lat, q).derivative(a));
        }
    }
    let mut total = StripField::from_levels(w.vgrid(), &vflux).unwrap().dz();
    for fl in &hflux {
        total = &total + &StripField::from_levels(w.vgrid(), fl).unwrap();
    }
    &total - &laplacian(w)
}

/// Solves `(d_z^2 - |xi|^2) w = F` per mode with `w(0) = top`,
/// `d_z w(-h) = bottom`. Values of `F` on the two boundary nodes are ignored.
pub fn solve_flat(f: &StripField, top: &SpectralField, bottom: &SpectralField) -> Result<StripField> {
    let lat = f.lattice();
    if top.lattice() != lat || bottom.lattice() != lat {
        return Err(Error::LatticeMismatch);
    }
    let vg = f.vgrid();
    let nz = vg.nz();
    let nm = lat.n_modes();
    let fc = f.coeffs();
    let mut groups: HashMap<i64, Vec<usize>> = HashMap::new();
    for (i, xi) in lat.modes().iter().enumerate() {
        groups.entry(xi.norm_sq()).or_default().push(i);
    }
    let mut out = vec![ZERO; nz * nm];
    let gather = |i: usize, j: usize| -> Complex64 {
        if j == 0 {
            top.coeffs()[i]
        } else if j == nz - 1 {
            bottom.coeffs()[i]
        } else {
            fc[j * nm + i]
        }
    };
    let mut cols = vec![[0.0f64; 4]; nz];
    for (k2, members) in groups {
        let inv = vg.flat_inverse(k2)?;
        // two modes (four real right-hand sides) per sweep over the inverse
        for pair in members.chunks(2) {
            for (j, c) in cols.iter_mut().enumerate() {
                let a = gather(pair[0], j);
                let b = pair.get(1).map_or(ZERO, |&i| gather(i, j));
                *c = [a.re, a.im, b.re, b.im];
            }
            for j in 0..nz {
                let row = &inv[j * nz..(j + 1) * nz];
                let mut acc = [0.0f64; 4];
                for (r, c) in row.iter().zip(&cols) {
                    for q in 0..4 {
                        acc[q] += r * c[q];
                    }
                }
                out[j * nm + pair[0]] = Complex64::new(acc[0], acc[1]);
                if let Some(&i) = pair.get(1) {
                    out[j * nm + i] = Complex64::new(acc[2], acc[3]);
                }
            }
        }
    }
    let herm = f.is_hermitian() && top.is_hermitian() && bottom.is_hermitian();
    Ok(StripField::from_raw(lat, vg, out, herm))
}

/// Controls of the fixed-point iteration in [`solve_elliptic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Evaluate [`residual`] on the returned field (one extra `R` application).
    pub report_residual: bool,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions { tol: 1e-10, max_iter: 50, report_residual: true }
    }
}

/// Output of [`solve_elliptic`].
#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub w: StripField,
    /// Number of fixed-point updates performed.
    pub iterations: usize,
    /// Successive-difference ratios `|w^{k+1} - w^k| / |w^k - w^{k-1}|`.
    pub ratios: Vec<f64>,
    /// Last relative change `|w^{k+1} - w^k| / |w^1|`.
    pub final_change: f64,
    /// Relative residual, `NaN` when not requested.
    pub residual: f64,
}

impl EllipticSolution {
    /// Largest observed contraction ratio (0 when the first update already
    /// met the tolerance).
    pub fn contraction_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

/// Solves `(Delta_{x,z} + R) w = F`, `w(0) = psi_top`, `d_z w(-h) = theta_bottom`
/// by lifting the Dirichlet data and iterating
/// `v^{k+1} = solve_flat(F_v - R v^k, 0, theta_v)`.
pub fn solve_elliptic(
    geom: &SurfaceGeometry,
    f: &StripField,
    psi_top: &SpectralField,
    theta_bottom: &SpectralField,
    opts: &EllipticOptions,
) -> Result<EllipticSolution> {
    solve_elliptic_from(geom, f, psi_top, theta_bottom, opts, None)
}

/// [`solve_elliptic`] started from a previous solution instead of the flat solve.
pub fn solve_elliptic_from(
    geom: &SurfaceGeometry,
    f: &StripField,
    psi_top: &SpectralField,
    theta_bottom: &SpectralField,
    opts: &EllipticOptions,
    guess: Option<&StripField>,
) -> Result<EllipticSolution> {
    let vg = f.vgrid();
    if geom.vgrid() != vg {
        return Err(Error::GridMismatch("geometry built on another vertical grid".into()));
    }
    let lat = f.lattice();
    let nz = vg.nz();
    let lift = lift_dirichlet(psi_top, vg);
    let mut fv = f - &laplacian(&lift);
    if !geom.is_flat() {
        fv = &fv - &apply_r(geom, &lift);
    }
    let theta_v = theta_bottom - &lift.dz_at(nz - 1);
    let zero_top = SpectralField::zeros(lat);

    let mut v = match guess {
        Some(g) => {
            f.compatible(g)?;
            g - &lift
        }
        None => solve_flat(&fv, &zero_top, &theta_v)?,
    };
    let mut ratios = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut scale: Option<f64> = None;
    let mut stalled = 0;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = if geom.is_flat() {
            solve_flat(&fv, &zero_top, &theta_v)?
        } else {
            solve_flat(&(&fv - &apply_r(geom, &v)), &zero_top, &theta_v)?
        };
        let diff = (&next - &v).node_norm();
        let w1 = *scale.get_or_insert_with(|| (&next + &lift).node_norm());
        v = next;
        if !diff.is_finite() {
            return Err(Error::NoContraction { iteration: it, ratio: f64::INFINITY });
        }
        last_change = if w1 > 0.0 { diff / w1 } else { 0.0 };
        if let Some(p) = prev_diff {
            if p > 1e-13 * w1 {
                let r = diff / p;
                ratios.push(r);
                if r >= 0.95 {
                    stalled += 1;
                    if stalled >= 3 {
                        return Err(Error::NoContraction { iteration: it, ratio: r });
                    }
                } else {
                    stalled = 0;
                }
            }
        }
        prev_diff = Some(diff);
        if last_change < opts.tol {
            let w = &v + &lift;
            let res = if opts.report_residual { residual(geom, &w, f) } else { f64::NAN };
            return Ok(EllipticSolution { w, iterations: it, ratios, final_change: last_change, residual: res });
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, tol: opts.tol, last: last_change })
}

/// `|(Delta_{x,z} + R) w - F|` over interior nodes, divided by `|F| + |w|`.
pub fn residual(geom: &SurfaceGeometry, w: &StripField, f: &StripField) -> f64 {
    let mut op = laplacian(w);
    if !geom.is_flat() {
        op = &op + &apply_r(geom, w);
    }
    let num = (&op - f).interior_norm();
    let den = f.node_norm() + w.node_norm();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Which `z`-norm [`strip_norm`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZNorm {
    Sup,
    L2,
}

/// `sup_z` or `L^2_z` of `|e^{lambda z |D|} w(., z)|_{H^{lambda h, mu}}`.
pub fn strip_norm(w: &StripField, lambda: f64, mu: f64, mode: ZNorm) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter {
            key: "lambda".into(),
            reason: format!("need 0 <= lambda < 1, got {lambda}"),
        });
    }
    let h = w.vgrid().depth();
    let per_level: Vec<f64> = w
        .vgrid()
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &z)| {
            log_weighted_norm(&w.level(j), |xi| lambda * (z + h) * xi.norm() + mu * xi.bracket().ln())
        })
        .collect::<Result<_>>()
        .map_err(|_| Error::Overflow { sigma: lambda * h, xi_norm: w.lattice().max_norm() })?;
    Ok(match mode {
        ZNorm::Sup => per_level.iter().cloned().fold(0.0, f64::max),
        ZNorm::L2 => per_level
            .iter()
            .zip(w.vgrid().weights())
            .map(|(n, q)| n * n * q)
            .sum::<f64>()
            .sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Lattice, Wavevector};
    use crate::strip::build_geometry;

    fn setup(m: usize, nz: usize) -> (Lattice, VerticalGrid) {
        (Lattice::new(1, m, 1.0, 1.0).unwrap(), VerticalGrid::new(nz, 1.0).unwrap())
    }

    /// `sin(x) (z + h)^2`
    fn manufactured(lat: &Lattice, vg: &VerticalGrid) -> StripField {
        StripField::from_level_fn(vg, |_, z| SpectralField::sine(lat, Wavevector::new1(1), (z + 1.0).powi(2)))
    }

    #[test]
    fn lift_satisfies_boundary_problem() {
        let (lat, vg) = setup(16, 48);
        let psi = SpectralField::cosine(&lat, Wavevector::new1(1), 1.0);
        let lift = lift_dirichlet(&psi, &vg);
        assert_eq!(lift.top(), psi);
        assert!(lift.dz_at(47).coeff_norm() < 1e-10);
        assert!(laplacian(&lift).interior_norm() / lift.node_norm() < 1e-10);
        let tanh1 = 0.761594155955764888119458282605;
        assert!((lift.dz_at(0).coeff(Wavevector::new1(1)).re - 0.5 * tanh1).abs() < 1e-12);
        let c = SpectralField::constant(&lat, 2.0);
        let lc = lift_dirichlet(&c, &vg);
        assert!((0..48).all(|j| lc.level(j) == c));
    }

    #[test]
    fn flat_solve_matches_lift_and_manufactured() {
        let (lat, vg) = setup(16, 48);
        let zero = StripField::zeros(&lat, &vg);
        let z0 = SpectralField::zeros(&lat);
        assert_eq!(solve_flat(&zero, &z0, &z0).unwrap().max_abs(), 0.0);

        let psi = SpectralField::from_real_fn(&lat, |xi| (-0.5 * xi.norm()).exp());
        let w = solve_flat(&zero, &psi, &z0).unwrap();
        assert!((&w - &lift_dirichlet(&psi, &vg)).max_abs() < 1e-10);

        let exact = manufactured(&lat, &vg);
        // (d_z^2 + Delta_x) sin(x)(z+1)^2 = sin(x)(2 - (z+1)^2)
        let f = StripField::from_level_fn(&vg, |_, z| {
            SpectralField::sine(&lat, Wavevector::new1(1), 2.0 - (z + 1.0).powi(2))
        });
        let top = exact.top();
        let bottom = SpectralField::zeros(&lat);
        let got = solve_flat(&f, &top, &bottom).unwrap();
        assert!((&got - &exact).max_abs() < 1e-9);
    }

    #[test]
    fn both_forms_of_r_agree() {
        let (lat, vg) = setup(32, 48);
        let eta = &SpectralField::cosine(&lat, Wavevector::new1(1), 0.05)
            + &SpectralField::sine(&lat, Wavevector::new1(3), 0.01);
        let geom = build_geometry(&eta, &vg).unwrap();
        let w = StripField::from_level_fn(&vg, |_, z| {
            &SpectralField::sine(&lat, Wavevector::new1(1), (z + 1.0).powi(2))
                + &SpectralField::cosine(&lat, Wavevector::new1(2), (0.7 * z).cos())
        });
        let nd = apply_r(&geom, &w);
        let dv = apply_div_form(&geom, &w);
        let gap = (&nd - &dv).node_norm() / w.node_norm();
        assert!(gap < 1e-6, "gap {gap}");
    }

    #[test]
    fn curved_manufactured_solution() {
        let (lat, vg) = setup(32, 48);
        let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 0.05);
        let geom = build_geometry(&eta, &vg).unwrap();
        let exact = manufactured(&lat, &vg);
        let f = &laplacian(&exact) + &apply_r(&geom, &exact);
        let sol = solve_elliptic(&geom, &f, &exact.top(), &exact.dz_at(47), &EllipticOptions::default()).unwrap();
        let err = (&sol.w - &exact).node_norm() / exact.node_norm();
        assert!(err < 1e-8, "err {err}");
        assert!(sol.contraction_ratio() < 0.5, "ratio {}", sol.contraction_ratio());
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn flat_geometry_converges_in_one_update() {
        let (lat, vg) = setup(16, 24);
        let geom = build_geometry(&SpectralField::zeros(&lat), &vg).unwrap();
        let psi = SpectralField::cosine(&lat, Wavevector::new1(2), 1.0);
        let z0 = SpectralField::zeros(&lat);
        let f = StripField::zeros(&lat, &vg);
        let sol = solve_elliptic(&geom, &f, &psi, &z0, &EllipticOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!((&sol.w - &solve_flat(&f, &psi, &z0).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn strip_norm_of_z_constant_field() {
        let (lat, vg) = setup(8, 16);
        let u = SpectralField::cosine(&lat, Wavevector::new1(2), 1.0);
        let w = StripField::from_level_fn(&vg, |_, _| u.clone());
        let sup = strip_norm(&w, 0.0, 1.0, ZNorm::Sup).unwrap();
        let l2 = strip_norm(&w, 0.0, 1.0, ZNorm::L2).unwrap();
        assert!((sup - l2).abs() < 1e-14);
        let vg2 = VerticalGrid::new(16, 2.0).unwrap();
        let lat2 = Lattice::new(1, 8, 2.0, 1.0).unwrap();
        let u2 = SpectralField::cosine(&lat2, Wavevector::new1(2), 1.0);
        let w2 = StripField::from_level_fn(&vg2, |_, _| u2.clone());
        let r = strip_norm(&w2, 0.0, 0.0, ZNorm::L2).unwrap() / strip_norm(&w2, 0.0, 0.0, ZNorm::Sup).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }
}
