use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::lattice::{Lattice, Wavevector};

/// `c(xi) -> m(xi) c(xi)`. The hermitian flag survives only when `m` is
/// conjugate-symmetric on the retained lattice.
pub fn apply_multiplier(m: impl Fn(&Wavevector) -> Complex64, u: &SpectralField) -> SpectralField {
    let lat = u.lattice();
    let vals: Vec<Complex64> = lat.modes().iter().map(&m).collect();
    let symmetric = (0..vals.len()).all(|i| {
        let j = lat.neg_index(i);
        (vals[j] - vals[i].conj()).norm() <= 1e-15 * vals[i].norm().max(1.0)
    });
    let coeffs = u.coeffs().iter().zip(&vals).map(|(c, m)| c * m).collect();
    SpectralField::from_raw(lat, coeffs, symmetric && u.is_hermitian())
}

/// Fast path for real symbols that are even in `xi`.
pub fn apply_real_multiplier(m: impl Fn(&Wavevector) -> f64, u: &SpectralField) -> SpectralField {
    u.map_modes(true, |xi, c| c * m(xi))
}

/// `a(xi) = |xi| tanh(h |xi|)`, the flat-bottom Dirichlet-Neumann symbol.
pub fn dn_symbol(lattice: &Lattice) -> impl Fn(&Wavevector) -> f64 {
    let h = lattice.depth();
    move |xi: &Wavevector| {
        let k = xi.norm();
        k * (h * k).tanh()
    }
}
