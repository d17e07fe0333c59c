use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use waterwave::diagnostics::{conservation_report, read_checkpoint, wave_amplitude, write_checkpoint, StopReason};
use waterwave::evolution::{
    psi_nonlinearity, psi_nonlinearity_traces, resume, run, run_observed, BottomSource, Model, RunConfig, SourceMode,
    WaveState,
};
use waterwave::spectral::{Lattice, MollifierSpec, SpectralField, Wavevector};
use waterwave::strip::{EllipticOptions, VerticalGrid};

fn lattice(m: usize) -> Lattice {
    Lattice::new(1, m, 1.0, 1.0).unwrap()
}

fn model(nz: usize) -> Model {
    let opts = EllipticOptions { report_residual: false, ..EllipticOptions::default() };
    Model::new(VerticalGrid::new(nz, 1.0).unwrap(), BottomSource::Zero, None, opts, 0.5)
}

fn small_random(lat: &Lattice, rng: &mut ChaCha8Rng, amp: f64) -> SpectralField {
    let mut u = SpectralField::zeros(lat);
    for k in 1..=lat.max_mode() as i64 {
        let w = amp * (-0.6 * k as f64).exp();
        u = &u + &SpectralField::cosine(lat, Wavevector::new1(k), w * rng.gen_range(-1.0..1.0));
        u = &u + &SpectralField::sine(lat, Wavevector::new1(k), w * rng.gen_range(-1.0..1.0));
    }
    u
}

/// Advances a standing wave `eta = eps cos 2x` for one period in `n` steps and
/// returns the relative error of the k=2 wave amplitude against `e^{i w t}`.
fn one_period_error(n: usize) -> f64 {
    let lat = lattice(16);
    let m = model(24);
    let omega = (2.0 * 2f64.tanh()).sqrt();
    let period = 2.0 * PI / omega;
    let xi = Wavevector::new1(2);
    let eps = 1e-6;
    let mut st = WaveState::new(0.0, SpectralField::cosine(&lat, xi, eps), SpectralField::zeros(&lat)).unwrap();
    let u0 = wave_amplitude(&st.eta, &st.psi).coeff(xi);
    let dt = period / n as f64;
    for _ in 0..n {
        st = m.step_rk4(&st, dt).unwrap();
    }
    let exact = u0 * waterwave::spectral::Complex64::from_polar(1.0, omega * period);
    (wave_amplitude(&st.eta, &st.psi).coeff(xi) - exact).norm() / u0.norm()
}

#[test]
fn linear_mode_over_one_period() {
    let err = one_period_error(1000);
    assert!(err < 1e-8, "err {err:e}");
}

#[test]
fn rk4_is_fourth_order() {
    let coarse = one_period_error(20);
    let fine = one_period_error(40);
    let q = coarse / fine;
    assert!((12.0..20.0).contains(&q), "ratio {q} ({coarse:e} / {fine:e})");
}

#[test]
fn both_psi_forms_agree_on_small_states() {
    let lat = lattice(32);
    let vg = VerticalGrid::new(32, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let eta = small_random(&lat, &mut rng, 0.01);
        let psi = small_random(&lat, &mut rng, 0.01);
        let b = small_random(&lat, &mut rng, 0.001);
        let dn = waterwave::dn::compute_dn(&eta, &psi, &b, &vg, &EllipticOptions::default()).unwrap();
        let a = psi_nonlinearity(&eta, &psi, &dn);
        let t = psi_nonlinearity_traces(&eta, &dn);
        let gap = (&a - &t).max_abs();
        assert!(gap < 1e-9, "gap {gap:e}");
    }
}

#[test]
fn forward_then_backward_returns() {
    let lat = lattice(16);
    let m = model(24);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let st0 = WaveState::new(0.0, small_random(&lat, &mut rng, 0.01), small_random(&lat, &mut rng, 0.01)).unwrap();
    let dt = 0.05;
    let mut st = st0.clone();
    for _ in 0..40 {
        st = m.step_rk4(&st, dt).unwrap();
    }
    for _ in 0..40 {
        st = m.step_rk4(&st, -dt).unwrap();
    }
    let gap = (&st.eta - &st0.eta).max_abs() + (&st.psi - &st0.psi).max_abs();
    assert!(gap < 1e-7, "gap {gap:e}");
    assert!(st.t.abs() < 1e-12);
}

fn modal(k: i64, amp: f64, t0: f64, tau: Option<f64>, omega: f64) -> SourceMode {
    SourceMode { k: [k, 0], amp_re: amp, amp_im: 0.0, t0, tau, omega }
}

#[test]
fn mass_is_conserved_without_forcing() {
    let cfg = RunConfig { max_mode: 16, nz: 24, t_final: 3.0, cadence: 1, k_decay: 1e-3, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let eta = &SpectralField::cosine(&lat, Wavevector::new1(1), 0.02) + &SpectralField::constant(&lat, 0.01);
    let psi = SpectralField::sine(&lat, Wavevector::new1(2), 0.01);
    let rec = run(&cfg, &eta, &psi, &BottomSource::Zero).unwrap().record;
    assert!(rec.stop.is_completed());
    let rep = conservation_report(&rec, &BottomSource::Zero, lat.volume());
    assert!(rep.mass_drift < 1e-10, "{rep:?}");
}

#[test]
fn zero_mean_forcing_keeps_mass() {
    let cfg = RunConfig { max_mode: 16, nz: 24, t_final: 2.0, cadence: 1, k_decay: 1e-3, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let src = BottomSource::Modal { modes: vec![modal(1, 0.01, 1.0, Some(0.3), 2.0), modal(3, 0.005, 0.0, None, 1.0)] };
    let z = SpectralField::zeros(&lat);
    let rec = run(&cfg, &z, &z, &src).unwrap().record;
    assert!(rec.stop.is_completed());
    let rep = conservation_report(&rec, &src, lat.volume());
    assert!(rep.mass_drift < 1e-8, "{rep:?}");
    let moved = rec.rows.iter().map(|r| r.ms[0]).fold(0.0, f64::max);
    assert!(moved > 0.0);
}

#[test]
fn mean_forcing_raises_the_surface() {
    // RK4 integrates the mean forcing with Simpson's rule, so the step must
    // resolve the envelope width
    let cfg = RunConfig { max_mode: 16, nz: 24, t_final: 2.0, dt: Some(0.01), cadence: 10, k_decay: 1e-3, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let (c, tau) = (0.01, 0.2);
    let src = BottomSource::Modal { modes: vec![modal(0, c, 1.0, Some(tau), 0.0)] };
    let z = SpectralField::zeros(&lat);
    let rec = run(&cfg, &z, &z, &src).unwrap().record;
    let rep = conservation_report(&rec, &src, lat.volume());
    assert!(rep.mass_drift < 1e-8, "{rep:?}");
    // envelope tails beyond [0, 2] are below e^{-25}
    let expected = c * tau * PI.sqrt() * lat.volume();
    let growth = rec.rows.last().unwrap().mass - rec.rows[0].mass;
    assert!((growth - expected).abs() < 1e-6 * expected, "{growth} vs {expected}");
}

#[test]
fn mollifier_freezes_high_modes() {
    let lat = lattice(16);
    let opts = EllipticOptions { report_residual: false, ..EllipticOptions::default() };
    let j = MollifierSpec::new(3).unwrap();
    let m = Model::new(VerticalGrid::new(24, 1.0).unwrap(), BottomSource::Zero, Some(j), opts, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let st0 = WaveState::new(0.0, small_random(&lat, &mut rng, 0.02), small_random(&lat, &mut rng, 0.02)).unwrap();
    let mut st = st0.clone();
    for _ in 0..10 {
        st = m.step_rk4(&st, 0.05).unwrap();
        for (idx, xi) in lat.modes().iter().enumerate() {
            if xi.norm() >= 6.0 {
                assert_eq!(st.eta.coeffs()[idx], st0.eta.coeffs()[idx]);
                assert_eq!(st.psi.coeffs()[idx], st0.psi.coeffs()[idx]);
            }
        }
    }
    assert!((&st.eta - &st0.eta).max_abs() > 0.0);
}

#[test]
fn weighted_energy_stays_bounded() {
    let omega = (2.0 * 2f64.tanh()).sqrt();
    let cfg = RunConfig { max_mode: 32, nz: 24, t_final: 10.0 * PI / omega, cadence: 4, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let eta = SpectralField::cosine(&lat, Wavevector::new1(2), 1e-3);
    let rec = run(&cfg, &eta, &SpectralField::zeros(&lat), &BottomSource::Zero).unwrap().record;
    assert!(rec.stop.is_completed());
    let e0 = rec.rows[0].es;
    assert!(e0 > 0.0);
    for r in &rec.rows {
        assert!(r.es <= 2.0 * e0 && r.es >= 0.5 * e0, "E_s {} at t = {} (initial {e0})", r.es, r.t);
    }
}

#[test]
fn large_data_fails_loudly() {
    let cfg = RunConfig { max_mode: 32, nz: 24, t_final: 2.0, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 1.0);
    let rec = run(&cfg, &eta, &SpectralField::zeros(&lat), &BottomSource::Zero).unwrap().record;
    match &rec.stop {
        StopReason::BlowUp { .. } => {}
        StopReason::SolverFailure { message, .. } => assert!(message.contains("diffeomorphism"), "{message}"),
        other => panic!("unexpected stop {other:?}"),
    }
    assert!(rec.rows.iter().all(|r| r.ms.iter().all(|v| !v.is_nan())));
}

#[test]
fn checkpoint_restart_is_bit_exact() {
    let cfg = RunConfig { max_mode: 16, nz: 24, t_final: 1.0, cadence: 5, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let src = BottomSource::Modal { modes: vec![modal(1, 0.005, 0.0, None, 1.0)] };
    let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 0.02);
    let psi = SpectralField::sine(&lat, Wavevector::new1(2), 0.01);
    let mut saved = None;
    let full = run_observed(&cfg, &eta, &psi, &src, |st, _| {
        if saved.is_none() && st.t > 0.4 {
            saved = Some(write_checkpoint(st, &cfg.hash(), None));
        }
    })
    .unwrap();
    let ck = read_checkpoint(&saved.unwrap()).unwrap();
    assert_eq!(ck.config_hash, cfg.hash());
    let size = full.record.data_size.unwrap().total;
    let rest = resume(&cfg, ck.state, &src, size).unwrap();
    assert!(rest.record.stop.is_completed());
    assert_eq!(rest.state.t.to_bits(), full.state.t.to_bits());
    assert_eq!(rest.state.eta.coeffs(), full.state.eta.coeffs());
    assert_eq!(rest.state.psi.coeffs(), full.state.psi.coeffs());
}

#[test]
fn identical_configs_give_identical_records() {
    let cfg = RunConfig { max_mode: 16, nz: 24, t_final: 0.5, cadence: 2, ..RunConfig::default() };
    let lat = cfg.lattice().unwrap();
    let eta = SpectralField::cosine(&lat, Wavevector::new1(1), 0.01);
    let z = SpectralField::zeros(&lat);
    let a = run(&cfg, &eta, &z, &BottomSource::Zero).unwrap().record;
    let b = run(&cfg, &eta, &z, &BottomSource::Zero).unwrap().record;
    assert_eq!(a.csv_rows(), b.csv_rows());
}
