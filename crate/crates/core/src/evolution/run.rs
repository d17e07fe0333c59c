use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    energy_es, estimate_radius, hamiltonian, mass, measure_data_size, norms_snapshot, wave_amplitude, DataSize,
    PicardHistory, RadiusEstimate, RecordRow, ReformulatedState, RunRecord, StopReason,
};
use crate::dn::DNResult;
use crate::error::{Error, Result};
use crate::spectral::{Lattice, MollifierSpec, SpectralField};
use crate::strip::{EllipticOptions, VerticalGrid};

use super::picard::{picard_solve, PicardOptions};
use super::schedule::RadiusSchedule;
use super::source::BottomSource;
use super::state::{stable_dt, Model, WaveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4Mollified,
    Picard,
}

/// Parameters of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "d")]
    pub dim: usize,
    #[serde(rename = "M")]
    pub max_mode: usize,
    #[serde(rename = "h")]
    pub depth: f64,
    #[serde(rename = "g")]
    pub gravity: f64,
    #[serde(rename = "Nz")]
    pub nz: usize,
    pub scheme: Scheme,
    /// Mollifier scale, 0 for none.
    #[serde(rename = "n")]
    pub mollifier_n: u32,
    /// Fixed step; when absent the step is `cfl / sqrt(g a(xi_max))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_final: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_decay: f64,
    pub s: f64,
    /// Record every `cadence` steps (and the last one).
    pub cadence: usize,
    /// Stop once `sum(M_s)` exceeds this multiple of the data size.
    pub blowup_factor: f64,
    /// Stop once a usable radius estimate drops below this; 0 disables.
    pub radius_floor: f64,
    /// Noise floor of the radius fit, relative to the largest coefficient.
    pub radius_noise: f64,
    /// Coefficients below this fraction of a field's largest one are left
    /// out of the analytic norms.
    pub norm_floor: f64,
    pub radius_min_shells: usize,
    pub elliptic_tol: f64,
    pub elliptic_max_iter: usize,
    pub picard_nodes: usize,
    pub picard_max_sweeps: usize,
    pub picard_tol: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 1,
            max_mode: 64,
            depth: 1.0,
            gravity: 1.0,
            nz: 32,
            scheme: Scheme::Rk4Mollified,
            mollifier_n: 0,
            dt: None,
            cfl: 0.5,
            t_final: 1.0,
            lambda: 0.5,
            k_decay: 0.1,
            s: 4.0,
            cadence: 10,
            blowup_factor: 1e3,
            radius_floor: 0.0,
            radius_noise: 1e-12,
            norm_floor: 1e-13,
            radius_min_shells: 5,
            elliptic_tol: 1e-10,
            elliptic_max_iter: 50,
            picard_nodes: 17,
            picard_max_sweeps: 40,
            picard_tol: 1e-12,
            seed: 0,
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { key: key.into(), reason: reason.into() }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(invalid("d", "must be 1 or 2"));
        }
        if self.max_mode < 1 {
            return Err(invalid("M", "must be at least 1"));
        }
        for (key, v) in [("h", self.depth), ("g", self.gravity), ("t_final", self.t_final), ("cfl", self.cfl)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if self.nz < 8 {
            return Err(invalid("Nz", "must be at least 8"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(invalid("lambda", "must lie in (0, 1)"));
        }
        if !(self.k_decay >= 0.0 && self.k_decay.is_finite()) {
            return Err(invalid("K", "must be non-negative"));
        }
        if !self.s.is_finite() {
            return Err(invalid("s", "must be finite"));
        }
        if self.cadence == 0 {
            return Err(invalid("cadence", "must be at least 1"));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(invalid("blowup_factor", "must exceed 1"));
        }
        if !(self.radius_floor >= 0.0) {
            return Err(invalid("radius_floor", "must be non-negative"));
        }
        if !(self.norm_floor >= 0.0 && self.norm_floor < 1.0) {
            return Err(invalid("norm_floor", "must lie in [0, 1)"));
        }
        if !(self.radius_noise >= 0.0) {
            return Err(invalid("radius_noise", "must be non-negative"));
        }
        if !(self.elliptic_tol > 0.0) || self.elliptic_max_iter == 0 {
            return Err(invalid("elliptic_tol", "tolerance and iteration cap must be positive"));
        }
        if self.picard_nodes < 2 || self.picard_max_sweeps == 0 || !(self.picard_tol > 0.0) {
            return Err(invalid("picard_nodes", "need >= 2 nodes, >= 1 sweep and a positive tolerance"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.dim, self.max_mode, self.depth, self.gravity)
    }

    pub fn model(&self, source: BottomSource) -> Result<Model> {
        let vgrid = VerticalGrid::new(self.nz, self.depth)?;
        let mollifier = match self.mollifier_n {
            0 => None,
            n => Some(MollifierSpec::new(n)?),
        };
        let opts = EllipticOptions { tol: self.elliptic_tol, max_iter: self.elliptic_max_iter, report_residual: false };
        Ok(Model::new(vgrid, source, mollifier, opts, self.cfl))
    }

    /// Time step actually used: the configured or CFL step, shrunk so that
    /// a whole number of steps reaches `t_final`.
    pub fn step_plan(&self, lat: &Lattice) -> (f64, usize) {
        let target = self.dt.unwrap_or_else(|| stable_dt(lat, self.cfl));
        let n = (self.t_final / target - 1e-9).ceil().max(1.0) as usize;
        (self.t_final / n as f64, n)
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            n_time_nodes: self.picard_nodes,
            max_sweeps: self.picard_max_sweeps,
            tol: self.picard_tol,
            s: self.s,
            lambda: self.lambda,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    source: &'a BottomSource,
    sched: RadiusSchedule,
    rows: Vec<RecordRow>,
    ms_max: f64,
    es_l2: Vec<f64>,
    es_half: Vec<f64>,
}

impl Recorder<'_> {
    fn radius(&self, state: &WaveState) -> RadiusEstimate {
        let u = wave_amplitude(&state.eta, &state.psi);
        let floor = self.cfg.radius_noise * u.max_abs();
        estimate_radius(&u, floor, self.cfg.radius_min_shells)
    }

    fn ms(&self, state: &WaveState, dn: &DNResult) -> Result<[f64; 4]> {
        norms_snapshot(&state.eta, &state.psi, dn, self.sched.value(state.t).max(0.0), self.cfg.s, self.cfg.norm_floor)
    }

    fn push(&mut self, step: usize, state: &WaveState, dn: &DNResult, ms: [f64; 4]) -> Result<&RecordRow> {
        let sigma = self.sched.value(state.t).max(0.0);
        self.ms_max = self.ms_max.max(ms.iter().sum());
        let refo = ReformulatedState::with_floor(&state.eta, dn, sigma, self.cfg.s, self.cfg.norm_floor);
        self.es_l2.push(refo.us_l2_sq()?);
        self.es_half.push(refo.us_half_sq()?);
        let mut times: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        times.push(state.t);
        let es = *energy_es(&times, &self.es_l2, &self.es_half, self.sched.k, self.sched.eps).last().unwrap();
        let lat = state.lattice();
        let b_int = lat.volume() * self.source.mean(state.t);
        self.rows.push(RecordRow {
            t: state.t,
            step,
            mass: mass(&state.eta),
            hamiltonian: self.source.is_zero().then(|| hamiltonian(&state.eta, &state.psi, dn)),
            ms,
            ms_max: self.ms_max,
            sigma_sched: self.sched.value(state.t),
            radius: self.radius(state),
            us_l2_sq: *self.es_l2.last().unwrap(),
            us_half_sq: *self.es_half.last().unwrap(),
            es,
            flux_residual: (dn.g.integral() - b_int).abs(),
            dn_iterations: dn.iterations,
        });
        Ok(self.rows.last().unwrap())
    }
}

fn check_input(cfg: &RunConfig, lat: &Lattice, f: &SpectralField, name: &str) -> Result<()> {
    let fl = f.lattice();
    if fl.dim() != lat.dim() || fl.max_mode() != lat.max_mode() || fl.depth() != lat.depth() || fl.gravity() != lat.gravity() {
        return Err(invalid(name, format!("field lattice does not match the config (d={}, M={})", cfg.dim, cfg.max_mode)));
    }
    if !f.is_hermitian() {
        return Err(invalid(name, "initial data must be real"));
    }
    Ok(())
}

fn failure(t: f64, e: Error) -> StopReason {
    match e {
        Error::BlowUp { t, reason } => StopReason::BlowUp { t, reason },
        other => StopReason::SolverFailure { t, message: other.to_string() },
    }
}

/// Record of a run together with the last state reached.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub state: WaveState,
}

/// Integrates from `(eta0, psi0)` at `t = 0` to `t_final`, recording
/// diagnostics every `cadence` steps. Failures along the way end the run and
/// are reported in [`RunRecord::stop`]; invalid input is an error.
pub fn run(cfg: &RunConfig, eta0: &SpectralField, psi0: &SpectralField, source: &BottomSource) -> Result<RunOutput> {
    run_observed(cfg, eta0, psi0, source, |_, _| {})
}

/// [`run`] calling `observe` with the state and its DN traces at every recorded row.
pub fn run_observed(
    cfg: &RunConfig,
    eta0: &SpectralField,
    psi0: &SpectralField,
    source: &BottomSource,
    mut observe: impl FnMut(&WaveState, &DNResult),
) -> Result<RunOutput> {
    cfg.validate()?;
    let lat = cfg.lattice()?;
    check_input(cfg, &lat, eta0, "eta0")?;
    check_input(cfg, &lat, psi0, "psi0")?;
    source.check(&lat)?;
    let model = cfg.model(source.clone())?;
    let (dt, nsteps) = cfg.step_plan(&lat);
    let mut record = RunRecord {
        config_hash: cfg.hash(),
        dt,
        steps: 0,
        data_size: None,
        rows: Vec::new(),
        stop: StopReason::Completed,
        picard: None,
    };

    let mut state = WaveState::new(0.0, eta0.clone(), psi0.clone())?;
    if let Err(e) = model.ensure_dn(&mut state) {
        record.stop = failure(0.0, e);
        return Ok(RunOutput { record, state });
    }
    let size: DataSize = {
        let dn = state.cached_dn().unwrap();
        measure_data_size(&state.eta, &state.psi, dn, source, cfg.lambda * cfg.depth, cfg.s, cfg.t_final, cfg.norm_floor)?
    };
    record.data_size = Some(size);
    let sched = RadiusSchedule::new(cfg.lambda, cfg.depth, cfg.k_decay, size.total)?;
    if sched.value(cfg.t_final) < 0.0 {
        return Err(Error::ScheduleExhausted { t: sched.exhaustion_time(), sigma: sched.value(cfg.t_final) });
    }
    let ceiling = cfg.blowup_factor * size.total;
    let mut rec = Recorder { cfg, source, sched, rows: Vec::new(), ms_max: 0.0, es_l2: Vec::new(), es_half: Vec::new() };

    match cfg.scheme {
        Scheme::Rk4Mollified => {
            let (stop, last, done) = rk4_loop(cfg, &model, state, 0, nsteps, dt, &mut rec, ceiling, &mut observe)?;
            record.stop = stop;
            record.steps = done;
            state = last;
        }
        Scheme::Picard => match picard_solve(eta0, psi0, &model, cfg.t_final, &cfg.picard_options()) {
            Ok(res) => {
                for (i, (t, (e, p))) in res.times.iter().zip(res.final_path()).enumerate() {
                    let mut st = WaveState::new(*t, e.clone(), p.clone())?;
                    if let Err(err) = model.ensure_dn(&mut st) {
                        record.stop = failure(*t, err);
                        break;
                    }
                    let dn = st.cached_dn().unwrap();
                    let ms = rec.ms(&st, dn)?;
                    observe(&st, dn);
                    rec.push(i, &st, dn, ms)?;
                    state = st;
                }
                record.steps = res.differences.len();
                record.picard = Some(PicardHistory {
                    differences: res.differences,
                    ratios: res.ratios,
                    energies: res.energies,
                });
            }
            Err(e) => record.stop = failure(0.0, e),
        },
    }
    record.rows = rec.rows;
    Ok(RunOutput { record, state })
}

#[allow(clippy::too_many_arguments)]
fn rk4_loop(
    cfg: &RunConfig,
    model: &Model,
    mut state: WaveState,
    first: usize,
    nsteps: usize,
    dt: f64,
    rec: &mut Recorder,
    ceiling: f64,
    observe: &mut impl FnMut(&WaveState, &DNResult),
) -> Result<(StopReason, WaveState, usize)> {
    let mut done = first;
    for step in first..=nsteps {
        if let Err(e) = model.ensure_dn(&mut state) {
            return Ok((failure(state.t, e), state, done));
        }
        let dn = state.cached_dn().unwrap();
        let ms = rec.ms(&state, dn)?;
        let total: f64 = ms.iter().sum();
        if !total.is_finite() || (ceiling > 0.0 && total > ceiling) {
            observe(&state, dn);
            rec.push(step, &state, dn, ms)?;
            let stop = StopReason::BlowUp { t: state.t, reason: format!("M_s = {total:e} exceeds ceiling {ceiling:e}") };
            return Ok((stop, state, done));
        }
        if step % cfg.cadence == 0 || step == nsteps {
            observe(&state, dn);
            let row = rec.push(step, &state, dn, ms)?;
            if cfg.radius_floor > 0.0 && row.radius.usable && row.radius.sigma_est < cfg.radius_floor {
                let stop = StopReason::RadiusFloor { t: state.t, sigma: row.radius.sigma_est };
                return Ok((stop, state, done));
            }
        }
        if step == nsteps {
            break;
        }
        // land exactly on t_final
        let h = if step + 1 == nsteps { cfg.t_final - state.t } else { dt };
        match model.step_rk4(&state, h) {
            Ok(next) => {
                state = next;
                done = step + 1;
            }
            Err(e) => return Ok((failure(state.t + h, e), state, done)),
        }
    }
    Ok((StopReason::Completed, state, done))
}

/// Continues an RK4 run from `state` (typically read back from a checkpoint)
/// to `cfg.t_final`. `data_size` is the measured size of the original data,
/// which fixes the radius schedule and the blow-up ceiling.
pub fn resume(cfg: &RunConfig, state: WaveState, source: &BottomSource, data_size: f64) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Rk4Mollified {
        return Err(invalid("scheme", "only RK4 runs can be resumed"));
    }
    let lat = cfg.lattice()?;
    check_input(cfg, &lat, &state.eta, "eta")?;
    check_input(cfg, &lat, &state.psi, "psi")?;
    source.check(&lat)?;
    let model = cfg.model(source.clone())?;
    let (dt, nsteps) = cfg.step_plan(&lat);
    let first = (state.t / dt).round() as usize;
    if first > nsteps || (first as f64 * dt - state.t).abs() > 1e-9 * dt.max(state.t) {
        return Err(invalid("t", format!("state time {} is not on the step grid of this config", state.t)));
    }
    let sched = RadiusSchedule::new(cfg.lambda, cfg.depth, cfg.k_decay, data_size)?;
    if sched.value(cfg.t_final) < 0.0 {
        return Err(Error::ScheduleExhausted { t: sched.exhaustion_time(), sigma: sched.value(cfg.t_final) });
    }
    let mut rec = Recorder { cfg, source, sched, rows: Vec::new(), ms_max: 0.0, es_l2: Vec::new(), es_half: Vec::new() };
    let (stop, state, done) =
        rk4_loop(cfg, &model, state, first, nsteps, dt, &mut rec, cfg.blowup_factor * data_size, &mut |_, _| {})?;
    let record = RunRecord {
        config_hash: cfg.hash(),
        dt,
        steps: done,
        data_size: None,
        rows: rec.rows,
        stop,
        picard: None,
    };
    Ok(RunOutput { record, state })
}
