use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;

use super::lattice::{Lattice, Wavevector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Truncated Fourier coefficients of a function on `T^d`.
///
/// Coefficients follow `u(x) = sum_xi e^{i x.xi} c(xi)`, i.e.
/// `c(xi) = (2 pi)^{-d} int e^{-i x.xi} u(x) dx`. Norms are computed from the
/// stored coefficients directly.
#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(lattice: &Lattice) -> Self {
        SpectralField {
            lattice: lattice.clone(),
            coeffs: vec![ZERO; lattice.n_modes()],
            hermitian: true,
        }
    }

    /// Builds a field from coefficients in lexicographic order. The hermitian
    /// flag is set when the coefficients are conjugate-symmetric to round-off.
    pub fn from_coeffs(lattice: &Lattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.n_modes() {
            return Err(Error::SizeMismatch {
                expected: lattice.n_modes(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter {
                key: "coeffs".into(),
                reason: "non-finite amplitude".into(),
            });
        }
        let mut f = SpectralField {
            lattice: lattice.clone(),
            coeffs,
            hermitian: false,
        };
        if f.conjugate_symmetry_defect() <= 1e-14 * f.max_abs().max(f64::MIN_POSITIVE) {
            f.hermitian = true;
            f.symmetrize();
        }
        Ok(f)
    }

    /// Evaluates `c(xi) = f(xi)` on every retained mode.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(&Wavevector) -> Complex64) -> Self {
        let coeffs = lattice.modes().iter().map(f).collect();
        Self::from_coeffs(lattice, coeffs).expect("coefficient function must be finite")
    }

    /// Real-valued field from a real, even coefficient profile `f(xi) = f(-xi)`.
    pub fn from_real_fn(lattice: &Lattice, f: impl Fn(&Wavevector) -> f64) -> Self {
        Self::from_fn(lattice, |xi| Complex64::new(f(xi), 0.0))
    }

    /// Unchecked constructor for internal pipelines that already guarantee
    /// the layout.
    pub(crate) fn from_raw(lattice: &Lattice, coeffs: Vec<Complex64>, hermitian: bool) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.n_modes());
        let mut f = SpectralField {
            lattice: lattice.clone(),
            coeffs,
            hermitian,
        };
        if hermitian {
            f.symmetrize();
        }
        f
    }

    /// Single real cosine-type mode `amp * (e^{i xi.x} + e^{-i xi.x}) / 2`.
    pub fn cosine(lattice: &Lattice, xi: Wavevector, amp: f64) -> Self {
        let mut f = Self::zeros(lattice);
        if xi.norm_sq() == 0 {
            f.coeffs[lattice.zero_index()] = Complex64::new(amp, 0.0);
        } else {
            let i = lattice.index_of(xi).expect("mode outside lattice");
            f.coeffs[i] += Complex64::new(0.5 * amp, 0.0);
            f.coeffs[lattice.neg_index(i)] += Complex64::new(0.5 * amp, 0.0);
        }
        f
    }

    /// Single real sine-type mode `amp * sin(xi.x)`.
    pub fn sine(lattice: &Lattice, xi: Wavevector, amp: f64) -> Self {
        let mut f = Self::zeros(lattice);
        if xi.norm_sq() != 0 {
            let i = lattice.index_of(xi).expect("mode outside lattice");
            f.coeffs[i] += Complex64::new(0.0, -0.5 * amp);
            f.coeffs[lattice.neg_index(i)] += Complex64::new(0.0, 0.5 * amp);
        }
        f
    }

    pub fn constant(lattice: &Lattice, value: f64) -> Self {
        Self::cosine(lattice, Wavevector::new1(0), value)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn coeff(&self, xi: Wavevector) -> Complex64 {
        self.lattice.index_of(xi).map_or(ZERO, |i| self.coeffs[i])
    }

    /// Mean value over the torus (the zero mode).
    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.lattice.zero_index()]
    }

    /// `int_{T^d} u dx`.
    pub fn integral(&self) -> f64 {
        self.mean().re * self.lattice.volume()
    }

    /// Euclidean norm of the stored coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficient norm restricted to `|xi| <= radius`.
    pub fn coeff_norm_within(&self, radius: f64) -> f64 {
        self.lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(xi, _)| xi.norm() <= radius + 1e-12)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|c(-xi) - conj(c(xi))|` over the lattice.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.lattice.neg_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        for i in 0..=n / 2 {
            let j = n - 1 - i;
            let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
    }

    /// Maps every coefficient with its wavevector. The result is marked
    /// hermitian only when `keep_hermitian` is set and the input was.
    pub(crate) fn map_modes(
        &self,
        keep_hermitian: bool,
        f: impl Fn(&Wavevector, Complex64) -> Complex64,
    ) -> SpectralField {
        let coeffs = self
            .lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(xi, c)| f(xi, *c))
            .collect();
        SpectralField::from_raw(&self.lattice, coeffs, keep_hermitian && self.hermitian)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        SpectralField::from_coeffs(&self.lattice, coeffs).expect("finite scaling")
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> SpectralField {
        assert_eq!(self.lattice, other.lattice, "lattice mismatch");
        SpectralField {
            lattice: self.lattice.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// `i * conj`-free combination `self + i * other`; used to form complex
    /// pairings of two real fields.
    pub fn plus_i_times(&self, other: &SpectralField) -> SpectralField {
        assert_eq!(self.lattice, other.lattice, "lattice mismatch");
        let i = Complex64::new(0.0, 1.0);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + i * b)
            .collect();
        SpectralField::from_raw(&self.lattice, coeffs, false)
    }

    /// Zeroes every mode with `|xi| > radius`.
    pub fn truncate_to(&self, radius: f64) -> SpectralField {
        self.map_modes(true, |xi, c| if xi.norm() <= radius + 1e-12 { c } else { ZERO })
    }

    /// `d/dx_axis`.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        self.map_modes(true, |xi, c| c * Complex64::new(0.0, xi.component(axis)))
    }

    pub fn gradient(&self) -> Vec<SpectralField> {
        (0..self.lattice.dim()).map(|a| self.derivative(a)).collect()
    }

    pub fn laplacian(&self) -> SpectralField {
        self.map_modes(true, |xi, c| c * -(xi.norm_sq() as f64))
    }

    pub fn divergence(fields: &[SpectralField]) -> SpectralField {
        let mut out = fields[0].derivative(0);
        for (axis, f) in fields.iter().enumerate().skip(1) {
            out = &out + &f.derivative(axis);
        }
        out
    }

    /// Values on the physical grid.
    pub fn to_physical(&self) -> PhysicalField {
        let mut values = self.lattice.synthesize(&self.coeffs);
        if self.hermitian {
            for v in &mut values {
                v.im = 0.0;
            }
        }
        PhysicalField {
            lattice: self.lattice.clone(),
            values,
            real: self.hermitian,
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

/// Values of a field on the (dealiasing) physical grid.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    lattice: Lattice,
    values: Vec<Complex64>,
    real: bool,
}

impl PhysicalField {
    pub fn from_real(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.n_points() {
            return Err(Error::SizeMismatch {
                expected: lattice.n_points(),
                got: values.len(),
            });
        }
        Ok(PhysicalField {
            lattice: lattice.clone(),
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            real: true,
        })
    }

    pub fn from_complex(lattice: &Lattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.n_points() {
            return Err(Error::SizeMismatch {
                expected: lattice.n_points(),
                got: values.len(),
            });
        }
        let real = values.iter().all(|v| v.im == 0.0);
        Ok(PhysicalField {
            lattice: lattice.clone(),
            values,
            real,
        })
    }

    pub fn constant(lattice: &Lattice, value: f64) -> Self {
        PhysicalField {
            lattice: lattice.clone(),
            values: vec![Complex64::new(value, 0.0); lattice.n_points()],
            real: true,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &PhysicalField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.lattice, other.lattice);
        PhysicalField {
            lattice: self.lattice.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            real: self.real && other.real,
        }
    }

    pub fn mul(&self, other: &PhysicalField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn div(&self, other: &PhysicalField) -> Self {
        self.zip_with(other, |a, b| a / b)
    }

    pub fn add(&self, other: &PhysicalField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PhysicalField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_real(|v| v * s)
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        self.map_real(|v| v + s)
    }

    /// Pointwise map that preserves realness.
    pub fn map_real(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        PhysicalField {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
            real: self.real,
        }
    }

    /// `sum_i a_i * b_i` for vector fields.
    pub fn dot(a: &[PhysicalField], b: &[PhysicalField]) -> PhysicalField {
        let mut out = a[0].mul(&b[0]);
        for (x, y) in a.iter().zip(b).skip(1) {
            out = out.add(&x.mul(y));
        }
        out
    }

    /// Projection onto the retained band.
    pub fn to_spectral(&self) -> SpectralField {
        let coeffs = self.lattice.analyze(&self.values);
        SpectralField::from_raw(&self.lattice, coeffs, self.real)
    }
}

/// Samples on the physical grid to retained coefficients (orthogonal projection
/// onto the band; exact for band-limited samples).
pub fn forward_transform(lattice: &Lattice, samples: &[f64]) -> Result<SpectralField> {
    Ok(PhysicalField::from_real(lattice, samples.to_vec())?.to_spectral())
}

/// Complex-valued variant of [`forward_transform`].
pub fn forward_transform_complex(lattice: &Lattice, samples: &[Complex64]) -> Result<SpectralField> {
    Ok(PhysicalField::from_complex(lattice, samples.to_vec())?.to_spectral())
}

/// Physical-grid values of a field.
pub fn inverse_transform(u: &SpectralField) -> Vec<Complex64> {
    u.to_physical().values
}
