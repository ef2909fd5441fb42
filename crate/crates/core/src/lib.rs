//! Numerical solver for the Goursat problem of the hyperbolic Ernst-Maxwell
//! equations: boundary data on the two characteristics are turned into jump
//! matrices on a two-loop contour, a matrix Riemann-Hilbert problem is solved
//! per grid point, and the potentials are read off the value at the origin.

// `!(x > 0)` is the NaN-rejecting form of every positivity check here, and
// index loops mirror the multi-array stencil arithmetic.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundary;
pub mod cauchy;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod reconstruct;
pub mod rh;
pub mod run;
pub mod surface;
pub mod verify;
pub mod volterra;

pub use boundary::BoundaryProfile;
pub use error::{Error, Result};
pub use exact::FamilyParams;
pub use reconstruct::PotentialSample;
pub use rh::RhSolution;
pub use run::RunConfig;
pub use surface::{ContourSpec, SurfacePoint};
