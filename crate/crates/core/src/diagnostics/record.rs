use serde::{Deserialize, Serialize};

use super::norms::DataSize;
use super::radius::RadiusEstimate;
use crate::evolution::BottomSource;

/// One diagnostics sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub t: f64,
    pub step: usize,
    pub mass: f64,
    /// Only when the source vanishes.
    pub hamiltonian: Option<f64>,
    /// The four terms of `M_s` at `sigma(t)`.
    pub ms: [f64; 4],
    /// Running maximum of `sum(ms)`.
    pub ms_max: f64,
    pub sigma_sched: f64,
    pub radius: RadiusEstimate,
    pub us_l2_sq: f64,
    pub us_half_sq: f64,
    pub es: f64,
    /// `|int G dx - int b dx|`.
    pub flux_residual: f64,
    pub dn_iterations: usize,
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUp { t: f64, reason: String },
    RadiusFloor { t: f64, sigma: f64 },
    SolverFailure { t: f64, message: String },
}

impl StopReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, StopReason::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::BlowUp { .. } => "blow_up",
            StopReason::RadiusFloor { .. } => "radius_floor",
            StopReason::SolverFailure { .. } => "solver_failure",
        }
    }
}

/// Picard sweep history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardHistory {
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `m_nu(T)` per iterate.
    pub energies: Vec<f64>,
}

/// Time series of a run, every row tagged by `config_hash`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub dt: f64,
    pub steps: usize,
    pub data_size: Option<DataSize>,
    pub rows: Vec<RecordRow>,
    pub stop: StopReason,
    pub picard: Option<PicardHistory>,
}

impl RunRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// Column names of [`RunRecord::csv_rows`].
    pub const CSV_COLUMNS: &'static [&'static str] = &[
        "t",
        "step",
        "mass",
        "hamiltonian",
        "ms_eta",
        "ms_psi",
        "ms_v",
        "ms_b",
        "ms_max",
        "sigma_sched",
        "sigma_est",
        "sigma_usable",
        "sigma_rms",
        "us_l2_sq",
        "us_half_sq",
        "es",
        "flux_residual",
        "dn_iterations",
    ];

    /// Rows formatted with round-trip precision.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let f = |v: f64| format!("{v:e}");
        self.rows
            .iter()
            .map(|r| {
                vec![
                    f(r.t),
                    r.step.to_string(),
                    f(r.mass),
                    r.hamiltonian.map(f).unwrap_or_default(),
                    f(r.ms[0]),
                    f(r.ms[1]),
                    f(r.ms[2]),
                    f(r.ms[3]),
                    f(r.ms_max),
                    f(r.sigma_sched),
                    f(r.radius.sigma_est),
                    (r.radius.usable as u8).to_string(),
                    f(r.radius.rms_residual),
                    f(r.us_l2_sq),
                    f(r.us_half_sq),
                    f(r.es),
                    f(r.flux_residual),
                    r.dn_iterations.to_string(),
                ]
            })
            .collect()
    }
}

/// Drifts of the conserved quantities along a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `max_t |int eta(t) - int eta(0) - int_0^t int b|`.
    pub mass_drift: f64,
    /// `max_t |H(t) - H(0)| / |H(0)|`, only for unforced runs.
    pub hamiltonian_drift: Option<f64>,
    pub flux_balance_residual: f64,
}

pub fn conservation_report(record: &RunRecord, source: &BottomSource, volume: f64) -> ConservationReport {
    let Some(first) = record.rows.first() else {
        return ConservationReport { mass_drift: 0.0, hamiltonian_drift: None, flux_balance_residual: 0.0 };
    };
    let mut mass_drift: f64 = 0.0;
    let mut flux: f64 = 0.0;
    let mut prev_t = first.t;
    let mut inflow = 0.0;
    for r in &record.rows {
        inflow += volume * source.mean_integral(prev_t, r.t);
        prev_t = r.t;
        mass_drift = mass_drift.max((r.mass - first.mass - inflow).abs());
        flux = flux.max(r.flux_residual);
    }
    let hamiltonian_drift = match (source.is_zero(), first.hamiltonian) {
        (true, Some(h0)) => Some(
            record
                .rows
                .iter()
                .filter_map(|r| r.hamiltonian)
                .map(|h| if h0 != 0.0 { ((h - h0) / h0).abs() } else { h.abs() })
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    ConservationReport { mass_drift, hamiltonian_drift, flux_balance_residual: flux }
}
