use rustfft::num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::lattice::Wavevector;
use super::mollifier::bump;
use crate::error::{Error, Result};

fn same_lattice(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.lattice() != b.lattice() {
        return Err(Error::LatticeMismatch);
    }
    Ok(())
}

/// Pointwise product projected back onto the band. The physical grid holds
/// at least `3M + 1` points per axis, so the projection carries no aliasing.
pub fn product(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    same_lattice(u, v)?;
    Ok(u.to_physical().mul(&v.to_physical()).to_spectral())
}

/// Symbol of `S_j = sum_{k <= j-1} Delta_k`, i.e. `chi(2^{-j} xi)`; zero for `j < 0`.
fn low_pass_symbol(j: i32, xi: &Wavevector) -> f64 {
    if j < 0 {
        0.0
    } else {
        bump(xi.norm() / 2f64.powi(j))
    }
}

/// Symbol of the dyadic block `Delta_j`: `chi(xi)` for `j = -1`, otherwise
/// `chi(2^{-j-1} xi) - chi(2^{-j} xi)`, supported in `2^j <= |xi| <= 2^{j+2}`.
fn block_symbol(j: i32, xi: &Wavevector) -> f64 {
    low_pass_symbol(j + 1, xi) - low_pass_symbol(j, xi)
}

/// Highest block index that can be non-zero on the lattice.
fn top_block(u: &SpectralField) -> i32 {
    let mut j = -1;
    while 2f64.powi(j + 1) < u.lattice().max_norm() {
        j += 1;
    }
    j
}

/// Littlewood-Paley block `Delta_j u`, `j >= -1`.
pub fn lp_block(u: &SpectralField, j: i32) -> SpectralField {
    assert!(j >= -1, "block index must be >= -1");
    u.map_modes(true, |xi, c| c * block_symbol(j, xi))
}

/// `S_j u = sum_{k=-1}^{j-1} Delta_k u`.
pub fn lp_partial_sum(u: &SpectralField, j: i32) -> SpectralField {
    u.map_modes(true, |xi, c| c * low_pass_symbol(j, xi))
}

fn blocks(u: &SpectralField) -> Vec<SpectralField> {
    (-1..=top_block(u)).map(|j| lp_block(u, j)).collect()
}

/// Bony paraproduct `T_a u = sum_{j >= 2} S_{j-2}(a) Delta_j u`.
pub fn paraproduct(a: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    same_lattice(a, u)?;
    let mut acc: Option<PhysicalField> = None;
    for j in 2..=top_block(u) {
        let du = lp_block(u, j);
        if du.max_abs() == 0.0 {
            continue;
        }
        let term = lp_partial_sum(a, j - 2).to_physical().mul(&du.to_physical());
        acc = Some(match acc {
            Some(s) => s.add(&term),
            None => term,
        });
    }
    Ok(match acc {
        Some(s) => s.to_spectral(),
        None => SpectralField::zeros(a.lattice()),
    })
}

/// Resonant remainder `R(a, u) = sum_{|r - q| <= 2} Delta_r a Delta_q u`.
pub fn remainder(a: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    same_lattice(a, u)?;
    let ba = blocks(a);
    let bu = blocks(u);
    let nb = ba.len() as i32;
    let mut acc = PhysicalField::constant(a.lattice(), 0.0);
    for q in 0..nb {
        let lo = (q - 2).max(0);
        let hi = (q + 2).min(nb - 1);
        let mut near = ba[lo as usize].clone();
        for r in lo + 1..=hi {
            near = &near + &ba[r as usize];
        }
        acc = acc.add(&near.to_physical().mul(&bu[q as usize].to_physical()));
    }
    Ok(acc.to_spectral())
}

/// `b(D)(a u) - a b(D) u`.
pub fn commutator_multiplier(
    bsym: impl Fn(&Wavevector) -> Complex64,
    a: &SpectralField,
    u: &SpectralField,
) -> Result<SpectralField> {
    let bu = super::symbols::apply_multiplier(&bsym, u);
    let b_au = super::symbols::apply_multiplier(&bsym, &product(a, u)?);
    Ok(&b_au - &product(a, &bu)?)
}

/// Coefficients `e^{-y.xi} c(xi)`: the trace on `x + i y` of the holomorphic
/// extension of `u`.
pub fn holo_extend_eval(u: &SpectralField, y: &[f64]) -> Result<SpectralField> {
    let lat = u.lattice();
    if y.len() != lat.dim() {
        return Err(Error::SizeMismatch { expected: lat.dim(), got: y.len() });
    }
    let dot = |xi: &Wavevector| (0..lat.dim()).map(|a| y[a] * xi.component(a)).sum::<f64>();
    let worst = lat.modes().iter().map(|xi| -dot(xi)).fold(f64::NEG_INFINITY, f64::max);
    if worst > 709.78 {
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Err(Error::Overflow { sigma: ynorm, xi_norm: lat.max_norm() });
    }
    let coeffs = lat
        .modes()
        .iter()
        .zip(u.coeffs())
        .map(|(xi, c)| c * (-dot(xi)).exp())
        .collect();
    Ok(SpectralField::from_raw(lat, coeffs, false))
}
