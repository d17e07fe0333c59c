use super::field::StripField;
use super::vgrid::VerticalGrid;
use crate::error::{Error, Result};
use crate::spectral::{apply_real_multiplier, PhysicalField, SpectralField};

/// Smallest admissible `d_z rho` anywhere on the grid.
pub const DIFFEO_FLOOR: f64 = 0.1;

/// Grid values at one node `z_j`.
#[derive(Debug, Clone)]
pub(crate) struct Level {
    pub rho: Vec<f64>,
    pub dz_rho: Vec<f64>,
    pub dzz_rho: Vec<f64>,
    pub grad_rho: Vec<Vec<f64>>,
    /// `A = (1 + |grad rho|^2) / d_z rho`
    pub big_a: Vec<f64>,
    pub coef_a: Vec<f64>,
    pub coef_b: Vec<f64>,
    pub coef_d: Vec<f64>,
}

/// The change of variables `rho(x, z) = (z + h)/h e^{z|D|} eta + z` together
/// with the coefficients of `R = a d_z^2 + b Delta_x + c . grad_x d_z - d d_z`.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    eta: SpectralField,
    vgrid: VerticalGrid,
    pub(crate) levels: Vec<Level>,
    min_dz_rho: f64,
    flat: bool,
}

fn real(u: &SpectralField) -> Vec<f64> {
    u.to_physical().real_values()
}

pub fn build_geometry(eta: &SpectralField, vgrid: &VerticalGrid) -> Result<SurfaceGeometry> {
    if !eta.is_hermitian() {
        return Err(Error::InvalidParameter {
            key: "eta".into(),
            reason: "surface elevation must be real".into(),
        });
    }
    let lat = eta.lattice();
    if (lat.depth() - vgrid.depth()).abs() > 1e-14 * lat.depth() {
        return Err(Error::GridMismatch("lattice depth differs from vertical grid depth".into()));
    }
    let h = lat.depth();
    let dim = lat.dim();
    let npts = lat.n_points();
    let flat = eta.max_abs() == 0.0;
    let mut levels = Vec::with_capacity(vgrid.nz());
    let mut min_dz_rho = f64::INFINITY;
    for &z in vgrid.nodes() {
        let s = (z + h) / h;
        let e = apply_real_multiplier(|xi| (z * xi.norm()).exp(), eta);
        let de = apply_real_multiplier(|xi| xi.norm(), &e);
        let dde = apply_real_multiplier(|xi| xi.norm_sq() as f64, &e);
        let ev = real(&e);
        let dev = real(&de);
        let ddev = real(&dde);
        let grad_e: Vec<Vec<f64>> = (0..dim).map(|a| real(&e.derivative(a))).collect();
        let grad_de: Vec<Vec<f64>> = (0..dim).map(|a| real(&de.derivative(a))).collect();

        let rho: Vec<f64> = ev.iter().map(|e| s * e + z).collect();
        let dz_rho: Vec<f64> = (0..npts).map(|i| 1.0 + ev[i] / h + s * dev[i]).collect();
        let dzz_rho: Vec<f64> = (0..npts).map(|i| 2.0 / h * dev[i] + s * ddev[i]).collect();
        let grad_rho: Vec<Vec<f64>> = grad_e.iter().map(|g| g.iter().map(|v| s * v).collect()).collect();
        let lap_rho: Vec<f64> = ddev.iter().map(|v| -s * v).collect();
        let grad_dz_rho: Vec<Vec<f64>> = (0..dim)
            .map(|a| (0..npts).map(|i| grad_e[a][i] / h + s * grad_de[a][i]).collect())
            .collect();

        let mut big_a = vec![0.0; npts];
        let mut coef_a = vec![0.0; npts];
        let mut coef_b = vec![0.0; npts];
        let mut coef_d = vec![0.0; npts];
        for i in 0..npts {
            let g2: f64 = (0..dim).map(|a| grad_rho[a][i] * grad_rho[a][i]).sum();
            let cross: f64 = (0..dim).map(|a| grad_rho[a][i] * grad_dz_rho[a][i]).sum();
            let rz = dz_rho[i];
            min_dz_rho = min_dz_rho.min(rz);
            big_a[i] = (1.0 + g2) / rz;
            coef_a[i] = big_a[i] - 1.0;
            coef_b[i] = rz - 1.0;
            coef_d[i] = (big_a[i] * dzz_rho[i] + rz * lap_rho[i] - 2.0 * cross) / rz;
        }
        levels.push(Level { rho, dz_rho, dzz_rho, grad_rho, big_a, coef_a, coef_b, coef_d });
    }
    if min_dz_rho <= DIFFEO_FLOOR || !min_dz_rho.is_finite() {
        return Err(Error::DiffeomorphismFailure { min_dz_rho, floor: DIFFEO_FLOOR });
    }
    Ok(SurfaceGeometry { eta: eta.clone(), vgrid: vgrid.clone(), levels, min_dz_rho, flat })
}

impl SurfaceGeometry {
    pub fn eta(&self) -> &SpectralField {
        &self.eta
    }

    pub fn vgrid(&self) -> &VerticalGrid {
        &self.vgrid
    }

    pub fn min_dz_rho(&self) -> f64 {
        self.min_dz_rho
    }

    /// True when `eta = 0`, i.e. `R = 0`.
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    fn strip_of(&self, pick: impl Fn(&Level) -> &Vec<f64>) -> StripField {
        let lat = self.eta.lattice();
        let levels: Vec<SpectralField> = self
            .levels
            .iter()
            .map(|l| PhysicalField::from_real(lat, pick(l).clone()).unwrap().to_spectral())
            .collect();
        StripField::from_levels(&self.vgrid, &levels).unwrap()
    }

    pub fn rho(&self) -> StripField {
        self.strip_of(|l| &l.rho)
    }

    pub fn dz_rho(&self) -> StripField {
        self.strip_of(|l| &l.dz_rho)
    }

    pub fn dzz_rho(&self) -> StripField {
        self.strip_of(|l| &l.dzz_rho)
    }

    pub fn grad_rho(&self, axis: usize) -> StripField {
        self.strip_of(|l| &l.grad_rho[axis])
    }

    pub fn coef_a(&self) -> StripField {
        self.strip_of(|l| &l.coef_a)
    }

    pub fn coef_b(&self) -> StripField {
        self.strip_of(|l| &l.coef_b)
    }

    /// `c = -2 grad_x rho`, component `axis`.
    pub fn coef_c(&self, axis: usize) -> StripField {
        self.grad_rho(axis).scale(-2.0)
    }

    pub fn coef_d(&self) -> StripField {
        self.strip_of(|l| &l.coef_d)
    }

    /// `d_z rho` at `z = -h` as a horizontal field.
    pub fn dz_rho_bottom(&self) -> SpectralField {
        let lat = self.eta.lattice();
        PhysicalField::from_real(lat, self.levels.last().unwrap().dz_rho.clone())
            .unwrap()
            .to_spectral()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Lattice, Wavevector};

    #[test]
    fn flat_surface_has_no_remainder() {
        let lat = Lattice::new(1, 8, 1.0, 1.0).unwrap();
        let vg = VerticalGrid::new(10, 1.0).unwrap();
        let g = build_geometry(&SpectralField::zeros(&lat), &vg).unwrap();
        assert!(g.is_flat());
        for (l, z) in g.levels.iter().zip(vg.nodes()) {
            assert!(l.rho.iter().all(|r| r == z));
            assert!(l.dz_rho.iter().all(|r| *r == 1.0));
            assert!(l.coef_a.iter().chain(&l.coef_b).chain(&l.coef_d).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn surface_and_bottom_values() {
        let lat = Lattice::new(1, 8, 1.0, 1.0).unwrap();
        let vg = VerticalGrid::new(12, 1.0).unwrap();
        let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 0.05);
        let g = build_geometry(&eta, &vg).unwrap();
        let x = lat.grid_points();
        for (i, p) in x.iter().enumerate() {
            assert!((g.levels[0].rho[i] - 0.05 * p[0].cos()).abs() < 1e-15);
            let bottom = g.levels.last().unwrap();
            assert!(bottom.grad_rho[0][i].abs() < 1e-16);
            assert!((bottom.rho[i] + 1.0).abs() < 1e-15);
            let expect = 1.0 + 0.05 * (-1.0f64).exp() * p[0].cos();
            assert!((bottom.dz_rho[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn large_surface_rejected() {
        let lat = Lattice::new(1, 8, 1.0, 1.0).unwrap();
        let vg = VerticalGrid::new(12, 1.0).unwrap();
        let eta = SpectralField::cosine(&lat, Wavevector::new1(3), 1.0);
        assert!(matches!(build_geometry(&eta, &vg), Err(Error::DiffeomorphismFailure { .. })));
    }
}
