//! Numerical nonlocal geometry: fractional/nonlocal perimeters, principal-value
//! nonlocal mean curvatures, and fully explicit density-estimate constants.
//!
//! Sets are exact membership predicates (no meshes), kernels are symmetric with
//! a two-sided fractional envelope, and every reported number carries a
//! statistical error and an analytic tail bound. The [`suites`] module exposes
//! runnable verifiers for the density estimates; `examples/` has one runnable
//! program per capability and `src/bin/nlg.rs` is a thin batch driver.

pub mod constants;
pub mod curvature;
pub mod density;
pub mod kernels;
pub mod perimeter;
pub mod point;
pub mod quad;
pub mod report;
pub mod scene;
pub mod sets;
pub mod special;
pub mod suites;

pub use constants::ConstantLedger;
pub use curvature::{PvEstimate, Verdict};
pub use kernels::KernelSpec;
pub use point::Point;
pub use quad::QuadConfig;
pub use sets::{Region, RegionSet, TouchingBall};

/// Gate factor for statistical comparisons: a check fails only when the
/// discrepancy exceeds this many standard errors.
pub const SIGMA_GATE: f64 = 3.0;
