//! Error types shared across the solver.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the domain triangle")]
    Domain { x: f64, y: f64 },

    #[error("spectral parameter {k} lies on the branch cut [{lo}, {hi}]")]
    BranchCut { k: Complex64, lo: f64, hi: f64 },

    #[error("characteristic segment degenerates on the {axis} edge")]
    Degenerate { axis: &'static str },

    #[error("contour construction failed: {0}")]
    ContourInfeasible(String),

    #[error("boundary data validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("integration tolerance not reachable: {0}")]
    Tolerance(String),

    #[error("spectral point inadmissible: {0}")]
    Admissibility(String),

    #[error("sparsity pattern violated (off-pattern defect {defect:.3e})")]
    Sparsity { defect: f64 },

    #[error("evaluation point {z} too close to the contour")]
    Proximity { z: Complex64 },

    #[error("contour function unresolved (top-mode defect {defect:.3e} at {n} nodes)")]
    Resolution { defect: f64, n: usize },

    #[error("collocation system numerically singular; RH problem may be unsolvable at ({x}, {y})")]
    SingularSystem { x: f64, y: f64 },

    #[error("Neumann series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("both recovery denominators vanish; solver output violates the solution identities")]
    DegenerateRecovery,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("limit extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}
