//! Truncated Fourier representation on the torus and the analytic-space
//! calculus built on top of it.

mod calculus;
mod field;
mod lattice;
mod mollifier;
mod norms;
pub(crate) mod snapshot;
mod symbols;

pub use calculus::{commutator_multiplier, holo_extend_eval, lp_block, lp_partial_sum, paraproduct, product, remainder};
pub use field::{forward_transform, forward_transform_complex, inverse_transform, PhysicalField, SpectralField};
pub use lattice::{Lattice, Wavevector};
pub use mollifier::{bump, mollify, MollifierSpec};
pub use norms::{analytic_norm, log_weighted_norm, AnalyticIndex};
pub use snapshot::{read_snapshot, write_snapshot};
pub use symbols::{apply_multiplier, apply_real_multiplier, dn_symbol};

pub use rustfft::num_complex::Complex64;
