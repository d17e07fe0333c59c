//! The fluid domain straightened to `T^d x [-h, 0]`: vertical collocation
//! grid, the smoothing change of variables, and the elliptic solver for the
//! transformed Laplacian.

mod field;
mod geometry;
mod solver;
mod vgrid;

pub use field::StripField;
pub use geometry::{build_geometry, SurfaceGeometry, DIFFEO_FLOOR};
pub use solver::{
    apply_div_form, apply_r, laplacian, lift_dirichlet, residual, solve_elliptic, solve_elliptic_from,
    solve_flat, strip_norm, EllipticOptions, EllipticSolution, ZNorm,
};
pub use vgrid::VerticalGrid;
