//! A closed-form family of solutions used as an end-to-end oracle: E = 1,
//! H = p t + i q z in the characteristic coordinates
//! t = sqrt(x) sqrt(1-y) + sqrt(y) sqrt(1-x), z = sqrt(y) sqrt(1-x) - sqrt(x) sqrt(1-y),
//! for p^2 + q^2 = 1. The p = 1 member is the classical colliding
//! electromagnetic shock-wave solution.

use crate::boundary::{Axis, BoundaryProfile};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::reconstruct::PotentialSample;

#[derive(Debug, Clone, Copy)]
pub struct FamilyParams {
    pub p: f64,
    pub q: f64,
}

impl FamilyParams {
    pub fn new(p: f64, q: f64) -> Result<FamilyParams> {
        if (p * p + q * q - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(vec![format!(
                "family parameters must satisfy p^2 + q^2 = 1, got {}",
                p * p + q * q
            )]));
        }
        Ok(FamilyParams { p, q })
    }

    pub fn bell_szekeres() -> FamilyParams {
        FamilyParams { p: 1.0, q: 0.0 }
    }
}

/// Characteristic coordinates (t, z) of the point (x, y).
pub fn tz(x: f64, y: f64) -> (f64, f64) {
    let a = x.sqrt() * (1.0 - y).sqrt();
    let b = y.sqrt() * (1.0 - x).sqrt();
    (a + b, b - a)
}

pub fn h_value(params: &FamilyParams, x: f64, y: f64) -> C64 {
    let (t, z) = tz(x, y);
    C64::new(params.p * t, params.q * z)
}

pub fn potentials(params: &FamilyParams, x: f64, y: f64) -> PotentialSample {
    let h = h_value(params, x, y);
    let f = 1.0 - h.norm_sqr();
    PotentialSample { x, y, e: C64::new(1.0, 0.0), h, f, chi: (1.0 - x - y) / f }
}

/// Corner-limit constants of the characteristic data and the associated
/// wavefront functionals |m|^2 + 4|n|^2 (one per axis).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryConstants {
    pub m1: C64,
    pub n1: C64,
    pub m2: C64,
    pub n2: C64,
    pub functional_x: f64,
    pub functional_y: f64,
}

pub fn boundary_constants(params: &FamilyParams) -> BoundaryConstants {
    let n1 = C64::new(params.p, -params.q) * 0.5;
    let n2 = n1.conj();
    BoundaryConstants {
        m1: C64::new(0.0, 0.0),
        n1,
        m2: C64::new(0.0, 0.0),
        n2,
        functional_x: 4.0 * n1.norm_sqr(),
        functional_y: 4.0 * n2.norm_sqr(),
    }
}

/// Characteristic restriction: H(x, 0) = (p - i q) sqrt(x) and
/// H(0, y) = (p + i q) sqrt(y), with E = 1 on both edges (alpha = 1/2).
pub fn profile(params: &FamilyParams, axis: Axis) -> BoundaryProfile {
    let coeff = match axis {
        Axis::X => C64::new(params.p, -params.q),
        Axis::Y => C64::new(params.p, params.q),
    };
    BoundaryProfile::shock(axis, coeff)
}

/// Closed-form first and mixed derivatives of H (interior points only).
pub fn h_derivatives(params: &FamilyParams, x: f64, y: f64) -> (C64, C64, C64) {
    let (sx, sy) = (x.sqrt(), y.sqrt());
    let (cx, cy) = ((1.0 - x).sqrt(), (1.0 - y).sqrt());
    let t_x = cy / (2.0 * sx) - sy / (2.0 * cx);
    let z_x = -sy / (2.0 * cx) - cy / (2.0 * sx);
    let t_y = -sx / (2.0 * cy) + cx / (2.0 * sy);
    let z_y = cx / (2.0 * sy) + sx / (2.0 * cy);
    let t_xy = -1.0 / (4.0 * sx * cy) - 1.0 / (4.0 * sy * cx);
    let z_xy = -1.0 / (4.0 * sy * cx) + 1.0 / (4.0 * sx * cy);
    let hx = C64::new(params.p * t_x, params.q * z_x);
    let hy = C64::new(params.p * t_y, params.q * z_y);
    let hxy = C64::new(params.p * t_xy, params.q * z_xy);
    (hx, hy, hxy)
}

/// The vacuum-equation potential (1 + H)/(1 - H) generated by the family.
/// Documentation-only output; it solves a different equation and is excluded
/// from all checks here.
pub fn vacuum_counterpart(params: &FamilyParams, x: f64, y: f64) -> C64 {
    let h = h_value(params, x, y);
    let one = C64::new(1.0, 0.0);
    (one + h) / (one - h)
}
