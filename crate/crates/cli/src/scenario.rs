//! Expansion of a [`Spec`] into runs, and the runs themselves.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use waterwave::diagnostics::{
    analytic_profile, conservation_report, decay_member_config, evolution_identity_residual, fit_decay, phase_frequency,
    wave_amplitude, DecayOptions, RunRecord,
};
use waterwave::dn::{check_div_v_identity, check_gradient_identity, DNResult};
use waterwave::error::Error;
use waterwave::evolution::{run_observed, BottomSource, RunConfig, Scheme, SourceMode, WaveState};
use waterwave::spectral::{analytic_norm, AnalyticIndex, Complex64, Lattice, PhysicalField, SpectralField, Wavevector};
use waterwave::strip::{EllipticOptions, VerticalGrid};

use crate::config::{ConfigError, ScenarioKind, Spec};
use crate::output::{write_checkpoint_file, write_csv, write_json, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Check,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e)
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// One entry per run that stopped early.
    pub failures: Vec<String>,
    /// Check mode only: identities above tolerance.
    pub tolerance_failures: Vec<String>,
}

impl Outcome {
    fn merge(&mut self, other: Outcome) {
        self.files.extend(other.files);
        self.failures.extend(other.failures);
        self.tolerance_failures.extend(other.tolerance_failures);
    }
}

pub fn execute(cmd: Command, spec: &Spec, out: &Path, jobs: usize) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out)?;
    match (cmd, spec.scenario.name) {
        (Command::Check, _) | (Command::Run, ScenarioKind::IdentitySuite) => identity_suite(spec, out, cmd),
        (_, ScenarioKind::RadiusDecaySweep) => decay_sweep(spec, out, jobs),
        (Command::Sweep, _) => amplitude_sweep(spec, out, jobs),
        (Command::Run, _) => single(spec, out, spec.scenario.name.label()),
    }
}

fn lattice(spec: &Spec) -> Result<Lattice, CliError> {
    Ok(spec.run.lattice()?)
}

fn wavevector(lat: &Lattice, (k, ky): (i64, i64)) -> Wavevector {
    if lat.dim() == 1 {
        Wavevector::new1(k)
    } else {
        Wavevector::new2(k, ky)
    }
}

/// Linear frequency `sqrt(g |k| tanh(|k| h))` of the initial mode.
fn linear_omega(spec: &Spec) -> f64 {
    let (k, ky) = spec.mode();
    let kn = ((k * k + ky * ky) as f64).sqrt();
    (spec.run.gravity * kn * (kn * spec.run.depth).tanh()).sqrt()
}

/// Run settings after scenario adjustments.
fn run_config(spec: &Spec) -> RunConfig {
    let mut cfg = spec.run.clone();
    if let Some(p) = spec.scenario.periods {
        cfg.t_final = p * 2.0 * PI / linear_omega(spec);
    }
    if spec.scenario.name == ScenarioKind::PicardVsRk4 {
        cfg.scheme = Scheme::Picard;
    }
    cfg
}

fn source(spec: &Spec, t_final: f64) -> BottomSource {
    if let Some(s) = &spec.source {
        return s.clone();
    }
    let (k, ky) = spec.mode();
    match spec.scenario.name {
        ScenarioKind::BottomForcing => BottomSource::Modal {
            modes: vec![SourceMode {
                k: [k, ky],
                amp_re: spec.amplitude(),
                amp_im: 0.0,
                t0: 0.5 * t_final,
                tau: Some(0.125 * t_final),
                omega: 0.0,
            }],
        },
        ScenarioKind::IdentitySuite => BottomSource::Modal {
            modes: vec![SourceMode { k: [k, ky], amp_re: 0.005, amp_im: 0.0, t0: 0.0, tau: None, omega: 1.0 }],
        },
        _ => BottomSource::Zero,
    }
}

fn initial_data(spec: &Spec, lat: &Lattice) -> (SpectralField, SpectralField) {
    let a = spec.amplitude();
    let xi = wavevector(lat, spec.mode());
    let zero = SpectralField::zeros(lat);
    match spec.scenario.name {
        ScenarioKind::GaussianBump => {
            let w = spec.scenario.width.unwrap_or(0.5);
            let vals = lat
                .grid_points()
                .iter()
                .map(|p| {
                    let r2: f64 = p[..lat.dim()].iter().map(|x| (x - PI).powi(2)).sum();
                    a * (-r2 / (w * w)).exp()
                })
                .collect();
            let eta = PhysicalField::from_real(lat, vals).expect("grid sized samples").to_spectral();
            (eta, zero)
        }
        ScenarioKind::BottomForcing => (zero.clone(), zero),
        ScenarioKind::RadiusDecaySweep => (analytic_profile(lat, a, spec.scenario.radius0.unwrap_or(0.5)), zero),
        ScenarioKind::IdentitySuite => (SpectralField::cosine(lat, xi, a), SpectralField::sine(lat, xi, a)),
        _ => (SpectralField::cosine(lat, xi, a), zero),
    }
}

fn stop_failure(prefix: &str, rec: &RunRecord) -> Option<String> {
    (!rec.stop.is_completed()).then(|| format!("{prefix}: {:?}", rec.stop))
}

fn tolerances(cfg: &RunConfig) -> Value {
    json!({
        "elliptic_tol": cfg.elliptic_tol,
        "picard_tol": cfg.picard_tol,
        "norm_floor": cfg.norm_floor,
        "radius_noise": cfg.radius_noise,
        "radius_min_shells": cfg.radius_min_shells,
        "blowup_factor": cfg.blowup_factor,
    })
}

/// One run with CSV, JSON summary and final checkpoint named after `prefix`.
fn single(spec: &Spec, out: &Path, prefix: &str) -> Result<Outcome, CliError> {
    single_run(spec, out, prefix).map(|(o, _)| o)
}

fn single_run(spec: &Spec, out: &Path, prefix: &str) -> Result<(Outcome, RunRecord), CliError> {
    let cfg = run_config(spec);
    let lat = lattice(spec)?;
    let src = source(spec, cfg.t_final);
    let (eta0, psi0) = initial_data(spec, &lat);
    let hash = spec.hash();
    let xi = wavevector(&lat, spec.mode());
    let omega = linear_omega(spec);
    let u0 = wave_amplitude(&eta0, &psi0).coeff(xi);
    let mut phases = Vec::new();
    let mut states = Vec::new();
    let keep_states = spec.scenario.name == ScenarioKind::PicardVsRk4;
    let output = run_observed(&cfg, &eta0, &psi0, &src, |st, _| {
        let u = wave_amplitude(&st.eta, &st.psi).coeff(xi);
        phases.push((st.t, u.arg(), u / (u0 * Complex64::from_polar(1.0, omega * st.t))));
        if keep_states {
            states.push((st.t, st.eta.clone(), st.psi.clone()));
        }
    })?;
    let record = &output.record;

    let mut table = Table::from_record(record);
    let mut extra = serde_json::Map::new();
    if spec.scenario.name == ScenarioKind::FlatLinear {
        table.add_column("dispersion_error", phases.iter().map(|(_, _, q)| q.arg().abs()).collect());
        let times: Vec<f64> = phases.iter().map(|p| p.0).collect();
        let args: Vec<f64> = phases.iter().map(|p| p.1).collect();
        let measured = phase_frequency(&times, &args);
        extra.insert(
            "dispersion".into(),
            json!({
                "omega_linear": omega,
                "omega_measured": measured,
                "relative_error": (measured - omega).abs() / omega,
            }),
        );
    }
    if keep_states && record.stop.is_completed() {
        let gaps = rk4_gaps(&cfg, &src, &eta0, &psi0, &states)?;
        extra.insert("rk4_gap_max".into(), json!(gaps.iter().copied().fold(0.0, f64::max)));
        table.add_column("rk4_gap", gaps);
    }

    let mut outcome = Outcome::default();
    outcome.files.push(write_csv(out, prefix, &hash, &table)?);
    let cons = conservation_report(record, &src, lat.volume());
    let summary = json!({
        "scenario": prefix,
        "config_hash": hash,
        "run_hash": record.config_hash,
        "config": spec,
        "effective_run": cfg,
        "source": src,
        "stop": record.stop,
        "steps": record.steps,
        "dt": record.dt,
        "data_size": record.data_size,
        "conservation": cons,
        "picard": record.picard,
        "tolerances": tolerances(&cfg),
        "results": Value::Object(extra),
    });
    outcome.files.push(write_json(out, prefix, &summary)?);
    let size = record.data_size.map(|d| d.total);
    outcome.files.push(write_checkpoint_file(out, prefix, &output.state, &hash, size)?);
    outcome.failures.extend(stop_failure(prefix, record));
    Ok((outcome, output.record))
}

/// `|eta_P - eta_RK4|_{H^s} + |psi_P - psi_RK4|_{H^s}` at each Picard node,
/// with RK4 stepping from node to node in steps no longer than the run's.
fn rk4_gaps(
    cfg: &RunConfig,
    src: &BottomSource,
    eta0: &SpectralField,
    psi0: &SpectralField,
    nodes: &[(f64, SpectralField, SpectralField)],
) -> Result<Vec<f64>, CliError> {
    let lat = cfg.lattice()?;
    let model = cfg.model(src.clone())?;
    let (dt, _) = cfg.step_plan(&lat);
    let idx = AnalyticIndex::sobolev(cfg.s);
    let mut st = WaveState::new(0.0, eta0.clone(), psi0.clone())?;
    let mut gaps = Vec::with_capacity(nodes.len());
    for (t, e, p) in nodes {
        let n = ((t - st.t) / dt).ceil().max(1.0) as usize;
        let h = (t - st.t) / n as f64;
        if h > 0.0 {
            for _ in 0..n {
                st = model.step_rk4(&st, h)?;
            }
        }
        gaps.push(analytic_norm(&(e - &st.eta), idx)? + analytic_norm(&(p - &st.psi), idx)?);
    }
    Ok(gaps)
}

/// Runs `f` over `items` on up to `jobs` threads, keeping the input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|sc| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every item ran")).collect()
}

fn member_spec(spec: &Spec, eps: f64) -> Spec {
    let mut m = spec.clone();
    m.scenario.amplitude = Some(eps);
    m
}

fn amplitude_sweep(spec: &Spec, out: &Path, jobs: usize) -> Result<Outcome, CliError> {
    let eps = spec.scenario.eps.clone().unwrap_or_default();
    let label = spec.scenario.name.label();
    let results = parallel_map(&eps, jobs, |i, &e| {
        let m = member_spec(spec, e);
        single(&m, out, &format!("{label}_{i:02}")).map(|o| (m.hash(), o))
    });
    let mut outcome = Outcome::default();
    let mut agg = Table::new(&["index", "amplitude", "config_hash", "status"]);
    let mut rows = Vec::new();
    for (i, (e, r)) in eps.iter().zip(results).enumerate() {
        match r {
            Ok((h, o)) => {
                let status = if o.failures.is_empty() { "completed".to_string() } else { o.failures.join("; ") };
                agg.push(vec![i.to_string(), format!("{e:e}"), h.clone(), status.clone()]);
                rows.push(json!({"index": i, "amplitude": e, "config_hash": h, "status": status}));
                outcome.merge(o);
            }
            Err(CliError::Input(err)) => {
                let msg = format!("{label}_{i:02}: {err}");
                agg.push(vec![i.to_string(), format!("{e:e}"), String::new(), format!("error: {err}")]);
                rows.push(json!({"index": i, "amplitude": e, "status": format!("error: {err}")}));
                outcome.failures.push(msg);
            }
            Err(other) => return Err(other),
        }
    }
    let hash = spec.hash();
    let name = format!("{label}_aggregate");
    outcome.files.push(write_csv(out, &name, &hash, &agg)?);
    let summary = json!({"scenario": label, "config_hash": hash, "config": spec, "members": rows, "failures": outcome.failures});
    outcome.files.push(write_json(out, &name, &summary)?);
    Ok(outcome)
}

fn decay_sweep(spec: &Spec, out: &Path, jobs: usize) -> Result<Outcome, CliError> {
    let sc = &spec.scenario;
    let eps = sc.eps.clone().unwrap_or_default();
    let label = sc.name.label();
    let base = spec.run.clone();
    let opts = DecayOptions {
        eps_list: eps.clone(),
        radius0: sc.radius0.unwrap_or(0.5),
        horizon_c: sc.horizon_c.unwrap_or(1.0),
        max_steps: sc.max_steps.unwrap_or(10_000) as usize,
        parallel: false,
    };
    let results = parallel_map(&eps, jobs, |i, &e| -> Result<_, CliError> {
        let mut m = member_spec(spec, e);
        m.run = decay_member_config(&base, &opts, e)?;
        let (o, record) = single_run(&m, out, &format!("{label}_{i:02}"))?;
        Ok((m.hash(), fit_decay(e, m.run.t_final, record), o))
    });
    let mut outcome = Outcome::default();
    let mut agg = Table::new(&[
        "index",
        "eps",
        "config_hash",
        "horizon",
        "data_size",
        "rate",
        "rate_over_eps",
        "intercept",
        "fit_rms",
        "sigma_initial",
        "usable_points",
        "envelope_violation",
        "stop",
    ]);
    let mut members = Vec::new();
    let mut rates = Vec::new();
    for (i, (e, r)) in eps.iter().zip(results).enumerate() {
        let f = |v: f64| format!("{v:e}");
        match r {
            Ok((hash, fit, o)) => {
                outcome.merge(o);
                let ratio = if *e > 0.0 { fit.rate / e } else { 0.0 };
                agg.push(vec![
                    i.to_string(),
                    f(*e),
                    hash.clone(),
                    f(fit.horizon),
                    fit.data_size.map(f).unwrap_or_default(),
                    f(fit.rate),
                    f(ratio),
                    f(fit.intercept),
                    f(fit.fit_rms),
                    f(fit.sigma_initial),
                    fit.usable_points.to_string(),
                    f(fit.envelope_violation),
                    fit.stop.label().to_string(),
                ]);
                rates.push((*e, fit.rate));
                members.push(json!({"index": i, "config_hash": hash, "fit": fit}));
            }
            Err(CliError::Input(err)) => {
                outcome.failures.push(format!("{label}_{i:02}: {err}"));
                members.push(json!({"index": i, "eps": e, "error": err.to_string()}));
            }
            Err(other) => return Err(other),
        }
    }
    // r(eps_{i+1}) / r(eps_i) for consecutive members
    let ratios: Vec<Value> = rates
        .windows(2)
        .map(|w| json!({"eps": [w[0].0, w[1].0], "rate_ratio": w[1].1 / w[0].1}))
        .collect();
    let hash = spec.hash();
    let name = format!("{label}_aggregate");
    outcome.files.push(write_csv(out, &name, &hash, &agg)?);
    let summary = json!({
        "scenario": label,
        "config_hash": hash,
        "config": spec,
        "tolerances": tolerances(&base),
        "members": members,
        "rate_ratios": ratios,
        "failures": outcome.failures,
    });
    outcome.files.push(write_json(out, &name, &summary)?);
    Ok(outcome)
}

fn random_state(lat: &Lattice, rng: &mut ChaCha8Rng, amp: f64) -> SpectralField {
    let mut u = SpectralField::zeros(lat);
    for xi in lat.modes() {
        if xi.norm() == 0.0 || xi.norm() > 6.0 {
            continue;
        }
        let w = amp * (-0.5 * xi.norm()).exp();
        u = &u + &SpectralField::cosine(lat, *xi, 0.5 * w * rng.gen_range(-1.0..1.0));
        u = &u + &SpectralField::sine(lat, *xi, 0.5 * w * rng.gen_range(-1.0..1.0));
    }
    u
}

fn identity_suite(spec: &Spec, out: &Path, cmd: Command) -> Result<Outcome, CliError> {
    let cfg = run_config(spec);
    let lat = lattice(spec)?;
    let vg = VerticalGrid::new(cfg.nz, cfg.depth)?;
    let opts = EllipticOptions { tol: cfg.elliptic_tol, max_iter: cfg.elliptic_max_iter, ..EllipticOptions::default() };
    let amp = spec.amplitude();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut grad, mut div): (f64, f64) = (0.0, 0.0);
    for _ in 0..spec.scenario.samples.unwrap_or(3) {
        let eta = random_state(&lat, &mut rng, amp);
        let psi = random_state(&lat, &mut rng, 1.0);
        let b = random_state(&lat, &mut rng, 0.01);
        grad = grad.max(check_gradient_identity(&eta, &psi, &b, &vg, &opts)?);
        div = div.max(check_div_v_identity(&eta, &psi, &b, &vg, &opts)?);
    }

    // stored run for the evolution identity
    let src = source(spec, cfg.t_final);
    let (eta0, psi0) = initial_data(spec, &lat);
    let mut ecfg = cfg.clone();
    ecfg.cadence = 1;
    ecfg.scheme = Scheme::Rk4Mollified;
    let mut stored: Vec<(f64, SpectralField, DNResult)> = Vec::new();
    let output = run_observed(&ecfg, &eta0, &psi0, &src, |st, dn| stored.push((st.t, st.eta.clone(), dn.clone())))?;
    let record = &output.record;
    let mut outcome = Outcome::default();
    outcome.failures.extend(stop_failure("identity_suite", record));
    let evolution = if stored.len() >= 5 {
        let mid = stored.len() / 2;
        let etas: Vec<SpectralField> = stored[mid - 2..=mid + 2].iter().map(|s| s.1.clone()).collect();
        let (t, _, dn) = &stored[mid];
        let j = ecfg.model(src.clone())?.mollifier;
        let b = src.eval(&lat, *t);
        Some(evolution_identity_residual(&etas, record.dt, dn, &b, &vg, &opts, j.as_ref())?)
    } else {
        outcome.failures.push("identity_suite: fewer than five stored states".into());
        None
    };

    let tol = &spec.check;
    let checks = [
        ("gradient_identity", Some(grad), tol.gradient_identity),
        ("div_v_identity", Some(div), tol.div_v_identity),
        ("evolution_identity", evolution, tol.evolution_identity),
    ];
    let mut entries = serde_json::Map::new();
    for (name, value, limit) in checks {
        let pass = value.is_some_and(|v| v < limit);
        if !pass && cmd == Command::Check {
            outcome.tolerance_failures.push(format!("{name}: {value:?} (tolerance {limit:e})"));
        }
        entries.insert(name.into(), json!({"residual": value, "tolerance": limit, "pass": pass}));
    }
    let hash = spec.hash();
    outcome.files.push(write_csv(out, "identity_suite", &hash, &Table::from_record(record))?);
    let summary = json!({
        "scenario": "identity_suite",
        "config_hash": hash,
        "config": spec,
        "source": src,
        "samples": spec.scenario.samples,
        "identities": Value::Object(entries),
        "stop": record.stop,
        "dt": record.dt,
        "tolerances": tolerances(&cfg),
    });
    outcome.files.push(write_json(out, "identity_suite", &summary)?);
    let size = record.data_size.map(|d| d.total);
    outcome.files.push(write_checkpoint_file(out, "identity_suite", &output.state, &hash, size)?);
    Ok(outcome)
}
