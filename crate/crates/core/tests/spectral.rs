use proptest::prelude::*;

use waterwave::spectral::{
    analytic_norm, forward_transform, holo_extend_eval, paraproduct, product, read_snapshot, remainder, write_snapshot,
    AnalyticIndex, Lattice, SpectralField, Wavevector,
};

/// Real field on `T^1` with the given cosine and sine amplitudes, scaled by `e^{-decay k}`.
fn field(lat: &Lattice, cos: &[f64], sin: &[f64], decay: f64) -> SpectralField {
    let mut u = SpectralField::constant(lat, cos[0]);
    for k in 1..=lat.max_mode() {
        let w = (-decay * k as f64).exp();
        let xi = Wavevector::new1(k as i64);
        u = &u + &SpectralField::cosine(lat, xi, w * cos[k]);
        u = &u + &SpectralField::sine(lat, xi, w * sin[k]);
    }
    u
}

fn amplitudes(m: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0f64..1.0, m + 1), prop::collection::vec(-1.0f64..1.0, m + 1))
}

const M: usize = 16;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bony_decomposition_is_exact((ac, as_) in amplitudes(M), (uc, us) in amplitudes(M)) {
        let lat = Lattice::new(1, M, 1.0, 1.0).unwrap();
        let a = field(&lat, &ac, &as_, 0.1);
        let u = field(&lat, &uc, &us, 0.1);
        let sum = &(&paraproduct(&a, &u).unwrap() + &paraproduct(&u, &a).unwrap()) + &remainder(&a, &u).unwrap();
        let full = product(&a, &u).unwrap();
        prop_assert!((&sum - &full).max_abs() <= 1e-12 * full.max_abs().max(1e-300));
    }

    #[test]
    fn product_is_symmetric_and_real((ac, as_) in amplitudes(M), (uc, us) in amplitudes(M)) {
        let lat = Lattice::new(1, M, 1.0, 1.0).unwrap();
        let a = field(&lat, &ac, &as_, 0.2);
        let u = field(&lat, &uc, &us, 0.2);
        let p = product(&a, &u).unwrap();
        prop_assert!((&p - &product(&u, &a).unwrap()).max_abs() < 1e-15);
        prop_assert!(p.conjugate_symmetry_defect() < 1e-15);
    }

    #[test]
    fn grid_samples_transform_back((c, s) in amplitudes(M)) {
        let lat = Lattice::new(1, M, 1.0, 1.0).unwrap();
        let u = field(&lat, &c, &s, 0.0);
        let back = forward_transform(&lat, &u.to_physical().real_values()).unwrap();
        prop_assert!((&back - &u).max_abs() < 1e-14);
    }

    #[test]
    fn norm_grows_with_radius((c, s) in amplitudes(M), s1 in 0.0f64..0.5, s2 in 0.0f64..0.5, reg in 0.0f64..4.0) {
        let lat = Lattice::new(1, M, 1.0, 1.0).unwrap();
        let u = field(&lat, &c, &s, 0.0);
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let nlo = analytic_norm(&u, AnalyticIndex::new(lo, reg).unwrap()).unwrap();
        let nhi = analytic_norm(&u, AnalyticIndex::new(hi, reg).unwrap()).unwrap();
        prop_assert!(nlo <= nhi * (1.0 + 1e-15));
    }

    #[test]
    fn extension_stays_below_analytic_norm((c, s) in amplitudes(M), sigma in 0.05f64..1.0, frac in -1.0f64..1.0) {
        let lat = Lattice::new(1, M, 1.0, 1.0).unwrap();
        let u = field(&lat, &c, &s, sigma);
        let y = frac * sigma;
        let ext = analytic_norm(&holo_extend_eval(&u, &[y]).unwrap(), AnalyticIndex::sobolev(1.0)).unwrap();
        let bound = analytic_norm(&u, AnalyticIndex::new(sigma, 1.0).unwrap()).unwrap();
        prop_assert!(ext <= bound * (1.0 + 1e-14));
    }

    #[test]
    fn snapshots_round_trip((c, s) in amplitudes(8)) {
        let lat = Lattice::new(1, 8, 2.0, 9.81).unwrap();
        let u = field(&lat, &c, &s, 0.3);
        let back = read_snapshot(&write_snapshot(&u)).unwrap();
        prop_assert_eq!(back, u);
    }
}

#[test]
fn two_dimensional_product_of_modes() {
    let lat = Lattice::new(2, 8, 1.0, 1.0).unwrap();
    let a = SpectralField::cosine(&lat, Wavevector::new2(1, 0), 1.0);
    let b = SpectralField::cosine(&lat, Wavevector::new2(0, 2), 1.0);
    let p = product(&a, &b).unwrap();
    // cos x cos 2y = (cos(x+2y) + cos(x-2y)) / 2
    for xi in [Wavevector::new2(1, 2), Wavevector::new2(1, -2), Wavevector::new2(-1, 2), Wavevector::new2(-1, -2)] {
        assert!((p.coeff(xi).re - 0.25).abs() < 1e-15);
    }
    assert!((p.coeff_norm() - 0.5).abs() < 1e-15);
}
