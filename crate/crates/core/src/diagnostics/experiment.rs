use serde::{Deserialize, Serialize};

use super::norms::analytic_profile;
use super::radius::fit_affine;
use super::record::{RunRecord, StopReason};
use crate::error::Result;
use crate::evolution::{run, BottomSource, RunConfig};
use crate::spectral::SpectralField;

/// Settings of [`radius_decay_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    pub eps_list: Vec<f64>,
    /// Analyticity radius of the initial elevation.
    pub radius0: f64,
    /// Horizon constant: each run lasts `c / eps`.
    pub horizon_c: f64,
    /// Upper bound on the number of steps per run.
    pub max_steps: usize,
    /// Run the members on separate threads.
    pub parallel: bool,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { eps_list: vec![0.01, 0.005], radius0: 0.5, horizon_c: 1.0, max_steps: 10_000, parallel: false }
    }
}

/// Affine fit `sigma_est(t) ~ sigma0 - r t` of one member of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub eps: f64,
    pub horizon: f64,
    /// Measured data size at `t = 0`.
    pub data_size: Option<f64>,
    /// Fitted decay rate `r(eps)` (minus the slope).
    pub rate: f64,
    pub intercept: f64,
    pub fit_rms: f64,
    pub sigma_initial: f64,
    pub usable_points: usize,
    /// Largest violation of `sigma_est(t) >= sigma_est(0) - r t - 3 rms` (0 when it holds).
    pub envelope_violation: f64,
    pub stop: StopReason,
    #[serde(skip)]
    pub record: Option<RunRecord>,
}

/// Fits `sigma_est(t)` over the usable rows of a record.
pub fn fit_decay(eps: f64, horizon: f64, record: RunRecord) -> DecayFit {
    let pts: Vec<(f64, f64)> = record
        .rows
        .iter()
        .filter(|r| r.radius.usable)
        .map(|r| (r.t, r.radius.sigma_est))
        .collect();
    let sigma_initial = record.rows.first().map(|r| r.radius.sigma_est).unwrap_or(f64::NAN);
    let (intercept, slope, rms) = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        fit_affine(&x, &y)
    } else {
        (sigma_initial, 0.0, 0.0)
    };
    let rate = -slope;
    let envelope_violation = pts
        .iter()
        .map(|(t, s)| (sigma_initial - rate * t - 3.0 * rms - s).max(0.0))
        .fold(0.0, f64::max);
    DecayFit {
        eps,
        horizon,
        data_size: record.data_size.map(|d| d.total),
        rate,
        intercept,
        fit_rms: rms,
        sigma_initial,
        usable_points: pts.len(),
        envelope_violation,
        stop: record.stop.clone(),
        record: Some(record),
    }
}

/// Settings of the sweep member with amplitude `eps`: `base` run to the
/// horizon `horizon_c / eps`, capped at `max_steps` steps.
pub fn decay_member_config(base: &RunConfig, opts: &DecayOptions, eps: f64) -> Result<RunConfig> {
    let lat = base.lattice()?;
    let (dt, _) = base.step_plan(&lat);
    let horizon = if eps > 0.0 { opts.horizon_c / eps } else { base.t_final };
    Ok(RunConfig { t_final: horizon.min(opts.max_steps as f64 * dt), ..base.clone() })
}

fn member(base: &RunConfig, opts: &DecayOptions, eps: f64) -> Result<DecayFit> {
    let cfg = decay_member_config(base, opts, eps)?;
    let horizon = cfg.t_final;
    let lat = cfg.lattice()?;
    let eta0 = analytic_profile(&lat, eps, opts.radius0);
    let psi0 = SpectralField::zeros(&lat);
    let record = run(&cfg, &eta0, &psi0, &BottomSource::Zero)?.record;
    Ok(fit_decay(eps, horizon, record))
}

/// Runs one member per amplitude `eps` (elevation analytic in the strip of
/// half-width `radius0`, zero potential) and fits the radius decay of each.
pub fn radius_decay_experiment(base: &RunConfig, opts: &DecayOptions) -> Vec<Result<DecayFit>> {
    if opts.parallel {
        std::thread::scope(|sc| {
            let handles: Vec<_> = opts.eps_list.iter().map(|&e| sc.spawn(move || member(base, opts, e))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep member panicked")).collect()
        })
    } else {
        opts.eps_list.iter().map(|&e| member(base, opts, e)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_has_flat_radius() {
        let base = RunConfig { max_mode: 16, nz: 16, t_final: 0.5, cadence: 1, ..RunConfig::default() };
        let opts = DecayOptions { eps_list: vec![0.0], ..DecayOptions::default() };
        let fit = radius_decay_experiment(&base, &opts).pop().unwrap().unwrap();
        assert_eq!(fit.rate, 0.0);
        assert!(fit.stop.is_completed());
    }
}
