use crate::dn::{band_relative, compute_dn_with, DNResult};
use crate::error::{Error, Result};
use crate::spectral::{mollify, product, MollifierSpec, SpectralField};
use crate::strip::{build_geometry, EllipticOptions, VerticalGrid};

/// `J[G(eta)(V, grad b) - (V . grad) zeta - (div V) zeta]`, the predicted
/// `d_t zeta` for `zeta = grad eta`.
pub fn zeta_tendency(
    eta: &SpectralField,
    dn: &DNResult,
    b: &SpectralField,
    vgrid: &VerticalGrid,
    opts: &EllipticOptions,
    mollifier: Option<&MollifierSpec>,
) -> Result<Vec<SpectralField>> {
    let dim = eta.lattice().dim();
    let geom = build_geometry(eta, vgrid)?;
    let div_v = SpectralField::divergence(&dn.v);
    let mut out = Vec::with_capacity(dim);
    for a in 0..dim {
        let za = eta.derivative(a);
        let mut rhs = compute_dn_with(&geom, &dn.v[a], &b.derivative(a), opts, None)?.g;
        for c in 0..dim {
            rhs = &rhs - &product(&dn.v[c], &za.derivative(c))?;
        }
        rhs = &rhs - &product(&div_v, &za)?;
        out.push(match mollifier {
            Some(j) => mollify(&rhs, j),
            None => rhs,
        });
    }
    Ok(out)
}

/// Fourth-order centred derivative at the middle of five equally spaced samples.
pub fn centered_derivative(samples: &[SpectralField], dt: f64) -> Result<SpectralField> {
    if samples.len() != 5 {
        return Err(Error::SizeMismatch { expected: 5, got: samples.len() });
    }
    let w = 1.0 / (12.0 * dt);
    Ok(samples[0]
        .scale(w)
        .axpy(-8.0 * w, &samples[1])
        .axpy(8.0 * w, &samples[3])
        .axpy(-w, &samples[4]))
}

/// Band-relative mismatch between the centred difference of `grad eta` over
/// five consecutive states and [`zeta_tendency`] at the middle one.
pub fn evolution_identity_residual(
    etas: &[SpectralField],
    dt: f64,
    dn_mid: &DNResult,
    b_mid: &SpectralField,
    vgrid: &VerticalGrid,
    opts: &EllipticOptions,
    mollifier: Option<&MollifierSpec>,
) -> Result<f64> {
    let dim = etas[0].lattice().dim();
    let predicted = zeta_tendency(&etas[2], dn_mid, b_mid, vgrid, opts, mollifier)?;
    let mut diffs = Vec::with_capacity(dim);
    for (a, p) in predicted.iter().enumerate() {
        let z: Vec<SpectralField> = etas.iter().map(|e| e.derivative(a)).collect();
        diffs.push(&centered_derivative(&z, dt)? - p);
    }
    Ok(band_relative(&diffs, &predicted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Lattice, Wavevector};

    #[test]
    fn centred_difference_is_fourth_order_exact_on_quartics() {
        let lat = Lattice::new(1, 4, 1.0, 1.0).unwrap();
        let base = SpectralField::cosine(&lat, Wavevector::new1(1), 1.0);
        let f = |t: f64| base.scale(t.powi(4) - 2.0 * t);
        let dt = 0.1;
        let s: Vec<SpectralField> = (-2..=2).map(|i| f(0.3 + i as f64 * dt)).collect();
        let d = centered_derivative(&s, dt).unwrap();
        let exact = base.scale(4.0 * 0.3f64.powi(3) - 2.0);
        assert!((&d - &exact).max_abs() < 1e-12);
        assert!(centered_derivative(&s[..3], dt).is_err());
    }
}
