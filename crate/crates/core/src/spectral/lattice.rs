use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Integer wavevector. For `d = 1` the second component is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wavevector {
    pub k: [i64; 2],
}

impl Wavevector {
    pub fn new1(k: i64) -> Self {
        Wavevector { k: [k, 0] }
    }

    pub fn new2(k1: i64, k2: i64) -> Self {
        Wavevector { k: [k1, k2] }
    }

    pub fn norm_sq(&self) -> i64 {
        self.k[0] * self.k[0] + self.k[1] * self.k[1]
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Japanese bracket `<xi> = (1 + |xi|^2)^(1/2)`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.norm_sq() as f64).sqrt()
    }

    pub fn component(&self, axis: usize) -> f64 {
        self.k[axis] as f64
    }

    pub fn neg(&self) -> Self {
        Wavevector {
            k: [-self.k[0], -self.k[1]],
        }
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k[0], self.k[1])
    }
}

struct LatticeInner {
    dim: usize,
    max_mode: usize,
    depth: f64,
    gravity: f64,
    grid_len: usize,
    modes: Vec<Wavevector>,
    // position of each retained mode in the FFT buffer
    bins: Vec<usize>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

/// Truncated Fourier lattice on the torus `T^d = (R / 2 pi Z)^d` together
/// with the physical constants of the fluid layer (depth `h`, gravity `g`).
///
/// Retained modes satisfy `|xi_i| <= M`. The physical grid has `N >= 3M + 1`
/// points per axis, so the pointwise product of two retained fields is
/// projected back onto the band without aliasing.
#[derive(Clone)]
pub struct Lattice {
    inner: Arc<LatticeInner>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("dim", &self.inner.dim)
            .field("max_mode", &self.inner.max_mode)
            .field("depth", &self.inner.depth)
            .field("gravity", &self.inner.gravity)
            .field("grid_len", &self.inner.grid_len)
            .finish()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.max_mode == other.inner.max_mode
                && self.inner.depth.to_bits() == other.inner.depth.to_bits()
                && self.inner.gravity.to_bits() == other.inner.gravity.to_bits())
    }
}

fn is_five_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// Smallest 5-smooth integer `>= 3M + 1`.
fn dealiased_grid_len(max_mode: usize) -> usize {
    let mut n = 3 * max_mode + 1;
    while !is_five_smooth(n) {
        n += 1;
    }
    n
}

impl Lattice {
    pub fn new(dim: usize, max_mode: usize, depth: f64, gravity: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidLattice(format!("d must be 1 or 2, got {dim}")));
        }
        if max_mode < 4 {
            return Err(Error::InvalidLattice(format!("M must be >= 4, got {max_mode}")));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidLattice(format!("h must be positive, got {depth}")));
        }
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(Error::InvalidLattice(format!("g must be positive, got {gravity}")));
        }
        let m = max_mode as i64;
        let modes: Vec<Wavevector> = if dim == 1 {
            (-m..=m).map(Wavevector::new1).collect()
        } else {
            (-m..=m)
                .flat_map(|k1| (-m..=m).map(move |k2| Wavevector::new2(k1, k2)))
                .collect()
        };
        let grid_len = dealiased_grid_len(max_mode);
        let n = grid_len as i64;
        let bins = modes
            .iter()
            .map(|xi| {
                let b0 = xi.k[0].rem_euclid(n) as usize;
                let b1 = xi.k[1].rem_euclid(n) as usize;
                if dim == 1 { b0 } else { b0 * grid_len + b1 }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(grid_len);
        let fft_inverse = planner.plan_fft_inverse(grid_len);
        Ok(Lattice {
            inner: Arc::new(LatticeInner {
                dim,
                max_mode,
                depth,
                gravity,
                grid_len,
                modes,
                bins,
                fft_forward,
                fft_inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn max_mode(&self) -> usize {
        self.inner.max_mode
    }

    pub fn depth(&self) -> f64 {
        self.inner.depth
    }

    pub fn gravity(&self) -> f64 {
        self.inner.gravity
    }

    /// Physical grid points per axis.
    pub fn grid_len(&self) -> usize {
        self.inner.grid_len
    }

    /// Total number of physical grid points, `N^d`.
    pub fn n_points(&self) -> usize {
        self.inner.grid_len.pow(self.inner.dim as u32)
    }

    pub fn n_modes(&self) -> usize {
        self.inner.modes.len()
    }

    /// Retained wavevectors in lexicographic order.
    pub fn modes(&self) -> &[Wavevector] {
        &self.inner.modes
    }

    /// Largest `|xi|` on the retained lattice.
    pub fn max_norm(&self) -> f64 {
        (self.inner.max_mode as f64) * (self.inner.dim as f64).sqrt()
    }

    /// Position of `xi` in the lexicographic coefficient layout.
    pub fn index_of(&self, xi: Wavevector) -> Option<usize> {
        let m = self.inner.max_mode as i64;
        let w = 2 * m + 1;
        if xi.k[0].abs() > m || xi.k[1].abs() > m {
            return None;
        }
        match self.inner.dim {
            1 if xi.k[1] == 0 => Some((xi.k[0] + m) as usize),
            1 => None,
            _ => Some(((xi.k[0] + m) * w + xi.k[1] + m) as usize),
        }
    }

    /// Index of `-xi` given the index of `xi`; the layout is point-symmetric.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        self.n_modes() - 1 - idx
    }

    /// Index of the zero mode.
    pub fn zero_index(&self) -> usize {
        self.n_modes() / 2
    }

    /// Grid coordinates `x_j = 2 pi j / N` (second coordinate zero for `d = 1`).
    pub fn grid_points(&self) -> Vec<[f64; 2]> {
        let n = self.inner.grid_len;
        let step = 2.0 * std::f64::consts::PI / n as f64;
        if self.inner.dim == 1 {
            (0..n).map(|j| [j as f64 * step, 0.0]).collect()
        } else {
            (0..n)
                .flat_map(|i| (0..n).map(move |j| [i as f64 * step, j as f64 * step]))
                .collect()
        }
    }

    /// Volume of the torus, `(2 pi)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.inner.dim as i32)
    }

    /// Synthesis `u(x_j) = sum_xi e^{i x_j . xi} c(xi)` on the physical grid.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_points()];
        for (b, c) in self.inner.bins.iter().zip(coeffs) {
            buf[*b] = *c;
        }
        if self.inner.dim == 1 {
            self.inner.fft_inverse.process(&mut buf);
        } else {
            self.fft_2d(&mut buf, false);
        }
        buf
    }

    /// Analysis `c(xi) = N^{-d} sum_j e^{-i x_j . xi} u(x_j)` restricted to the band.
    pub(crate) fn analyze(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        let scale = 1.0 / self.n_points() as f64;
        if self.inner.dim == 1 {
            self.inner.fft_forward.process(&mut buf);
        } else {
            self.fft_2d(&mut buf, true);
        }
        self.inner.bins.iter().map(|b| buf[*b] * scale).collect()
    }

    /// Grid values `f + i g` of two real fields given by their coefficients.
    pub(crate) fn synthesize_pair(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let packed: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a + i * b).collect();
        self.synthesize(&packed)
    }

    /// Band coefficients of `x` and `y` from grid values `x + i y` of two real fields.
    pub(crate) fn analyze_pair(&self, values: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let z = self.analyze(values);
        let n = z.len();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for k in 0..n {
            let zc = z[n - 1 - k].conj();
            x.push((z[k] + zc) * 0.5);
            y.push(Complex64::new(0.0, -0.5) * (z[k] - zc));
        }
        (x, y)
    }

    fn fft_2d(&self, buf: &mut [Complex64], forward: bool) {
        let n = self.inner.grid_len;
        let fft = if forward {
            &self.inner.fft_forward
        } else {
            &self.inner.fft_inverse
        };
        // rows are contiguous
        fft.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            fft.process(&mut col);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Lattice::new(3, 8, 1.0, 1.0).is_err());
        assert!(Lattice::new(1, 3, 1.0, 1.0).is_err());
        assert!(Lattice::new(1, 8, 0.0, 1.0).is_err());
        assert!(Lattice::new(1, 8, 1.0, -1.0).is_err());
    }

    #[test]
    fn grid_has_dealiasing_reserve() {
        for m in [4, 16, 32, 48, 64, 128] {
            let lat = Lattice::new(1, m, 1.0, 1.0).unwrap();
            assert!(lat.grid_len() >= 3 * m + 1);
        }
    }

    #[test]
    fn layout_is_lexicographic_and_point_symmetric() {
        let lat = Lattice::new(2, 4, 1.0, 1.0).unwrap();
        let modes = lat.modes();
        assert!(modes.windows(2).all(|w| w[0] < w[1]));
        for (i, xi) in modes.iter().enumerate() {
            assert_eq!(lat.index_of(*xi), Some(i));
            assert_eq!(modes[lat.neg_index(i)], xi.neg());
        }
        assert_eq!(modes[lat.zero_index()], Wavevector::new2(0, 0));
    }
}
