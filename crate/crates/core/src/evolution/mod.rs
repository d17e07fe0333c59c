//! Time integration: the (optionally mollified) system by classical RK4, the
//! Picard iteration in integral form, the shrinking-radius schedule and the
//! bottom source.

mod picard;
mod run;
mod schedule;
mod source;
mod state;

pub use picard::{cumulative_quadrature, picard_solve, PicardOptions, PicardResult};
pub use run::{resume, run, run_observed, RunConfig, RunOutput, Scheme};
pub use schedule::RadiusSchedule;
pub use source::{BottomSource, SourceMode};
pub use state::{psi_nonlinearity, psi_nonlinearity_traces, rhs, stable_dt, step_rk4, Model, Tendency, WaveState};
