use waterwave::diagnostics::l2_pairing;
use waterwave::dn::{check_div_v_identity, check_gradient_identity, compute_dn, dn_lipschitz_probe};
use waterwave::error::Error;
use waterwave::spectral::{Lattice, SpectralField, Wavevector};
use waterwave::strip::{EllipticOptions, VerticalGrid};

/// `sqrt(5) tanh(sqrt(5))`, 30 digits.
const SYMBOL_1_2: f64 = 2.18556020080536806364423374718;

fn surface(lat: &Lattice) -> SpectralField {
    &SpectralField::cosine(lat, Wavevector::new1(1), 0.05) + &SpectralField::sine(lat, Wavevector::new1(3), 0.01)
}

#[test]
fn flat_symbol_in_two_dimensions() {
    let lat = Lattice::new(2, 8, 1.0, 1.0).unwrap();
    let vg = VerticalGrid::new(32, 1.0).unwrap();
    let z = SpectralField::zeros(&lat);
    let psi = SpectralField::cosine(&lat, Wavevector::new2(1, 2), 1.0);
    let g = compute_dn(&z, &psi, &z, &vg, &EllipticOptions::default()).unwrap().g;
    assert!((&g - &psi.scale(SYMBOL_1_2)).coeff_norm() < 1e-10);
}

#[test]
fn dn_is_symmetric_and_nonnegative() {
    let lat = Lattice::new(1, 32, 1.0, 1.0).unwrap();
    let vg = VerticalGrid::new(32, 1.0).unwrap();
    let opts = EllipticOptions::default();
    let eta = surface(&lat);
    let z = SpectralField::zeros(&lat);
    let p1 = &SpectralField::cosine(&lat, Wavevector::new1(2), 1.0) + &SpectralField::sine(&lat, Wavevector::new1(1), 0.3);
    let p2 = SpectralField::from_real_fn(&lat, |xi| (-0.5 * xi.norm()).exp());
    let g1 = compute_dn(&eta, &p1, &z, &vg, &opts).unwrap().g;
    let g2 = compute_dn(&eta, &p2, &z, &vg, &opts).unwrap().g;
    let (a, b) = (l2_pairing(&g1, &p2), l2_pairing(&p1, &g2));
    assert!((a - b).abs() < 1e-8 * a.abs().max(b.abs()), "{a} vs {b}");
    assert!(l2_pairing(&g1, &p1) > 0.0);
    assert!(l2_pairing(&g2, &p2) > 0.0);
}

#[test]
fn identities_hold_on_a_curved_surface() {
    let lat = Lattice::new(1, 32, 1.0, 1.0).unwrap();
    let vg = VerticalGrid::new(32, 1.0).unwrap();
    let opts = EllipticOptions::default();
    let eta = surface(&lat);
    let psi = &SpectralField::cosine(&lat, Wavevector::new1(1), 1.0) + &SpectralField::cosine(&lat, Wavevector::new1(4), 0.1);
    let b = SpectralField::sine(&lat, Wavevector::new1(2), 0.02);
    assert!(check_gradient_identity(&eta, &psi, &b, &vg, &opts).unwrap() < 1e-5);
    assert!(check_div_v_identity(&eta, &psi, &b, &vg, &opts).unwrap() < 1e-5);
}

#[test]
fn dn_difference_is_linear_in_surface_gap() {
    let lat = Lattice::new(1, 32, 1.0, 1.0).unwrap();
    let vg = VerticalGrid::new(32, 1.0).unwrap();
    let opts = EllipticOptions::default();
    let eta = surface(&lat);
    let psi = SpectralField::cosine(&lat, Wavevector::new1(2), 1.0);
    let b = SpectralField::zeros(&lat);
    let bump = SpectralField::cosine(&lat, Wavevector::new1(2), 1e-3);
    let probe = |s: f64| dn_lipschitz_probe(&eta, &(&eta + &bump.scale(s)), &psi, &b, &vg, 0.3, 3.0, &opts).unwrap();
    let (p1, p2) = (probe(1.0), probe(0.5));
    let q = p1.diff_norm / p2.diff_norm;
    assert!((q - 2.0).abs() < 0.01, "ratio {q}");
    assert!((p1.eta_diff[0] / p2.eta_diff[0] - 2.0).abs() < 1e-12);
    assert!(p1.lambda1 > 0.0 && p1.lambda2 > 0.0);
}

#[test]
fn surface_reaching_the_bottom_is_rejected() {
    let lat = Lattice::new(1, 16, 1.0, 1.0).unwrap();
    let vg = VerticalGrid::new(16, 1.0).unwrap();
    let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 1.5);
    let z = SpectralField::zeros(&lat);
    let err = compute_dn(&eta, &z, &z, &vg, &EllipticOptions::default()).unwrap_err();
    assert!(matches!(err, Error::DiffeomorphismFailure { .. }), "{err:?}");
}
