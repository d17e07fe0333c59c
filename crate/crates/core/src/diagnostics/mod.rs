//! Quantities measured along runs: analytic norms of the surface unknowns,
//! the energy of the reformulated unknowns, conservation drifts, the
//! analyticity-radius estimate and the radius-decay experiment.

mod checkpoint;
mod experiment;
mod identity;
mod norms;
mod radius;
mod record;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use experiment::{decay_member_config, fit_decay, radius_decay_experiment, DecayFit, DecayOptions};
pub use identity::{centered_derivative, evolution_identity_residual, zeta_tendency};
pub use norms::{
    analytic_profile, denoise, energy_es, hamiltonian, l2_pairing, mass, measure_data_size, norms_snapshot, DataSize,
    ReformulatedState,
};
pub use radius::{estimate_radius, fit_affine, phase_frequency, wave_amplitude, RadiusEstimate};
pub use record::{conservation_report, ConservationReport, PicardHistory, RecordRow, RunRecord, StopReason};
