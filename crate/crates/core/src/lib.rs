//! Pseudospectral simulator for gravity water waves over a flat bottom with
//! bottom forcing, written in Craig-Sulem-Zakharov form on the torus `T^d`,
//! `d = 1, 2`.
//!
//! The crate is organised bottom-up: [`spectral`] holds the Fourier lattice
//! and analytic norms, [`strip`] the straightened fluid domain and its
//! elliptic solver, [`dn`] the Dirichlet-Neumann operator, [`evolution`] the
//! time integrators and [`diagnostics`] everything that is measured along a
//! run.

pub mod error;
pub mod spectral;
pub mod strip;
pub mod dn;
pub mod evolution;
pub mod diagnostics;

pub use error::{Error, Result};
