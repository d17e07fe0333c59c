use std::ops::{Add, Sub};

use rustfft::num_complex::Complex64;

use super::vgrid::VerticalGrid;
use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField};

/// Fourier coefficients in `x` sampled at the Chebyshev nodes in `z`.
/// Storage is level-major: all modes of `z_0`, then all modes of `z_1`, ...
#[derive(Debug, Clone)]
pub struct StripField {
    lattice: Lattice,
    vgrid: VerticalGrid,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

impl StripField {
    pub fn zeros(lattice: &Lattice, vgrid: &VerticalGrid) -> Self {
        StripField {
            lattice: lattice.clone(),
            vgrid: vgrid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.n_modes() * vgrid.nz()],
            hermitian: true,
        }
    }

    pub fn from_levels(vgrid: &VerticalGrid, levels: &[SpectralField]) -> Result<Self> {
        if levels.len() != vgrid.nz() {
            return Err(Error::GridMismatch(format!(
                "{} levels for {} nodes",
                levels.len(),
                vgrid.nz()
            )));
        }
        let lattice = levels[0].lattice().clone();
        if levels.iter().any(|l| l.lattice() != &lattice) {
            return Err(Error::LatticeMismatch);
        }
        let hermitian = levels.iter().all(|l| l.is_hermitian());
        let coeffs = levels.iter().flat_map(|l| l.coeffs().iter().copied()).collect();
        Ok(StripField { lattice, vgrid: vgrid.clone(), coeffs, hermitian })
    }

    /// Builds `w(x, z_j)` from a function of the level index and node.
    pub fn from_level_fn(
        vgrid: &VerticalGrid,
        f: impl Fn(usize, f64) -> SpectralField,
    ) -> Self {
        let levels: Vec<SpectralField> =
            vgrid.nodes().iter().enumerate().map(|(j, z)| f(j, *z)).collect();
        Self::from_levels(vgrid, &levels).expect("levels built on one lattice")
    }

    pub(crate) fn from_raw(lattice: &Lattice, vgrid: &VerticalGrid, coeffs: Vec<Complex64>, hermitian: bool) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.n_modes() * vgrid.nz());
        StripField { lattice: lattice.clone(), vgrid: vgrid.clone(), coeffs, hermitian }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn vgrid(&self) -> &VerticalGrid {
        &self.vgrid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn nz(&self) -> usize {
        self.vgrid.nz()
    }

    pub fn level_coeffs(&self, j: usize) -> &[Complex64] {
        let n = self.lattice.n_modes();
        &self.coeffs[j * n..(j + 1) * n]
    }

    /// Horizontal field at node `z_j`.
    pub fn level(&self, j: usize) -> SpectralField {
        SpectralField::from_raw(&self.lattice, self.level_coeffs(j).to_vec(), self.hermitian)
    }

    /// Trace at `z = 0`.
    pub fn top(&self) -> SpectralField {
        self.level(0)
    }

    /// Trace at `z = -h`.
    pub fn bottom(&self) -> SpectralField {
        self.level(self.nz() - 1)
    }

    pub(crate) fn compatible(&self, other: &StripField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        if self.vgrid != other.vgrid {
            return Err(Error::GridMismatch("different vertical grids".into()));
        }
        Ok(())
    }

    /// `out[j] = sum_k m[j, k] w[k]` as one real matrix product; `mt` is `m^T`.
    fn apply_vertical(&self, mt: &nalgebra::DMatrix<f64>) -> StripField {
        let nz = self.nz();
        let k = 2 * self.lattice.n_modes();
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        {
            let src = as_reals(&self.coeffs);
            let dst = as_reals_mut(&mut out);
            let w = nalgebra::DMatrixView::from_slice(src, k, nz);
            let mut o = nalgebra::DMatrixViewMut::from_slice(dst, k, nz);
            o.gemm(1.0, &w, mt, 0.0);
        }
        StripField::from_raw(&self.lattice, &self.vgrid, out, self.hermitian)
    }

    /// Collocation `d/dz`.
    pub fn dz(&self) -> StripField {
        self.apply_vertical(self.vgrid.d1t())
    }

    /// Collocation `d^2/dz^2`.
    pub fn dzz(&self) -> StripField {
        self.apply_vertical(self.vgrid.d2t())
    }

    /// `d/dz` evaluated at one node only.
    pub fn dz_at(&self, j: usize) -> SpectralField {
        let nm = self.lattice.n_modes();
        let d = self.vgrid.d1();
        let mut out = vec![Complex64::new(0.0, 0.0); nm];
        for k in 0..self.nz() {
            let w = d[(j, k)];
            for (o, s) in out.iter_mut().zip(self.level_coeffs(k)) {
                *o += s * w;
            }
        }
        SpectralField::from_raw(&self.lattice, out, self.hermitian)
    }

    /// Applies a horizontal multiplier depending on the node, `m(z, xi)`.
    pub fn map_modes(&self, f: impl Fn(f64, &crate::spectral::Wavevector) -> f64) -> StripField {
        let nm = self.lattice.n_modes();
        let mut out = self.coeffs.clone();
        for (j, z) in self.vgrid.nodes().iter().enumerate() {
            for (i, xi) in self.lattice.modes().iter().enumerate() {
                out[j * nm + i] *= f(*z, xi);
            }
        }
        StripField::from_raw(&self.lattice, &self.vgrid, out, self.hermitian)
    }

    pub fn laplacian_x(&self) -> StripField {
        self.map_modes(|_, xi| -(xi.norm_sq() as f64))
    }

    pub fn derivative_x(&self, axis: usize) -> StripField {
        let nm = self.lattice.n_modes();
        let mut out = self.coeffs.clone();
        for j in 0..self.nz() {
            for (i, xi) in self.lattice.modes().iter().enumerate() {
                out[j * nm + i] *= Complex64::new(0.0, xi.component(axis));
            }
        }
        StripField::from_raw(&self.lattice, &self.vgrid, out, self.hermitian)
    }

    pub fn scale(&self, s: f64) -> StripField {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        StripField::from_raw(&self.lattice, &self.vgrid, coeffs, self.hermitian)
    }

    pub fn axpy(&self, s: f64, other: &StripField) -> StripField {
        self.compatible(other).expect("incompatible strip fields");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * s).collect();
        StripField::from_raw(&self.lattice, &self.vgrid, coeffs, self.hermitian && other.hermitian)
    }

    /// Euclidean norm over every node and mode.
    pub fn node_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Euclidean norm over interior nodes only.
    pub fn interior_norm(&self) -> f64 {
        let nm = self.lattice.n_modes();
        self.coeffs[nm..(self.nz() - 1) * nm].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Text dump: header `# d M h g Nz`, then `j xi_1 [xi_2] re im` lines.
    pub fn write_snapshot(&self) -> String {
        use std::fmt::Write;
        let lat = &self.lattice;
        let mut out = String::new();
        writeln!(out, "# {} {} {:?} {:?} {}", lat.dim(), lat.max_mode(), lat.depth(), lat.gravity(), self.nz()).unwrap();
        for j in 0..self.nz() {
            for (xi, c) in lat.modes().iter().zip(self.level_coeffs(j)) {
                if lat.dim() == 1 {
                    write!(out, "{j} {}", xi.k[0]).unwrap();
                } else {
                    write!(out, "{j} {} {}", xi.k[0], xi.k[1]).unwrap();
                }
                writeln!(out, " {:.16e} {:.16e}", c.re, c.im).unwrap();
            }
        }
        out
    }

    /// Parses [`StripField::write_snapshot`] output.
    pub fn read_snapshot(text: &str) -> Result<StripField> {
        use crate::spectral::snapshot::{lattice_from_header, parse_header, parse_num};
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i0, head) = lines.next().ok_or(Error::Parse { line: 1, reason: "empty snapshot".into() })?;
        let tokens = parse_header(head, i0 + 1)?;
        let lat = lattice_from_header(&tokens, i0 + 1)?;
        let nz: usize = parse_num(tokens.get(4).map(String::as_str).unwrap_or(""), i0 + 1)?;
        let vgrid = VerticalGrid::new(nz, lat.depth())?;
        let d = lat.dim();
        let mut coeffs = Vec::with_capacity(nz * lat.n_modes());
        for j in 0..nz {
            for xi in lat.modes() {
                let (i, line) = lines.next().ok_or(Error::Parse { line: 0, reason: "truncated snapshot".into() })?;
                let tok: Vec<&str> = line.split_whitespace().collect();
                if tok.len() != d + 3 {
                    return Err(Error::Parse { line: i + 1, reason: "wrong number of columns".into() });
                }
                let jj: usize = parse_num(tok[0], i + 1)?;
                let ok = jj == j && (0..d).all(|a| tok[a + 1].parse::<i64>().ok() == Some(xi.k[a]));
                if !ok {
                    return Err(Error::Parse { line: i + 1, reason: format!("expected node {j}, mode {xi}") });
                }
                coeffs.push(Complex64::new(parse_num(tok[d + 1], i + 1)?, parse_num(tok[d + 2], i + 1)?));
            }
        }
        let levels: Vec<SpectralField> = coeffs
            .chunks(lat.n_modes())
            .map(|c| SpectralField::from_coeffs(&lat, c.to_vec()))
            .collect::<Result<_>>()?;
        let mut w = StripField::from_levels(&vgrid, &levels)?;
        // keep amplitudes exactly as written
        w.coeffs = coeffs;
        Ok(w)
    }
}

// Complex64 is #[repr(C)] { re, im }, so a slice of n complex values is a
// slice of 2n reals.
pub(crate) fn as_reals(c: &[Complex64]) -> &[f64] {
    unsafe { std::slice::from_raw_parts(c.as_ptr() as *const f64, 2 * c.len()) }
}

pub(crate) fn as_reals_mut(c: &mut [Complex64]) -> &mut [f64] {
    unsafe { std::slice::from_raw_parts_mut(c.as_mut_ptr() as *mut f64, 2 * c.len()) }
}

impl Add for &StripField {
    type Output = StripField;
    fn add(self, rhs: &StripField) -> StripField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &StripField {
    type Output = StripField;
    fn sub(self, rhs: &StripField) -> StripField {
        self.axpy(-1.0, rhs)
    }
}
