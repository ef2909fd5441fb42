//! Uniformization of the spectral Riemann surface.
//!
//! For a point (x, y) of the domain triangle the spectral curve is the
//! two-sheeted cover of the k-sphere branched at k = x and k = 1 - y, with
//! uniformizing coordinate z = (1 + lambda)/(1 - lambda) where
//! lambda^2 = (k - (1 - y))/(k - x). The plus sheet carries Re(lambda) > 0;
//! the branch cut maps onto the unit circle, the branch points to -1 and +1.
//!
//! This module also builds the two-loop collocation contour: one clockwise
//! circle around each branch-cut image, each orthogonal to the unit circle so
//! that it is invariant under z -> 1/z and z -> conj(z).

use crate::error::{Error, Result};
use crate::linalg::C64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }
}

/// A point on the spectral surface of (x, y), with cached coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub k: C64,
    pub sheet: Sheet,
    pub lambda: C64,
    pub z: C64,
}

pub fn in_domain(x: f64, y: f64) -> bool {
    x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x + y < 1.0
}

fn check_domain(x: f64, y: f64) -> Result<()> {
    if in_domain(x, y) {
        Ok(())
    } else {
        Err(Error::Domain { x, y })
    }
}

/// Principal square root steered to the plus sheet: Re >= 0, ties broken
/// towards Im > 0.
fn plus_root(ratio: C64) -> C64 {
    let r = ratio.sqrt();
    if r.re > 0.0 || (r.re == 0.0 && r.im > 0.0) {
        r
    } else {
        -r
    }
}

/// Sheet-resolved lambda(x, y, k). `k` may be infinite (lambda = +-1).
pub fn lambda(x: f64, y: f64, k: C64, sheet: Sheet) -> Result<C64> {
    check_domain(x, y)?;
    if !k.re.is_finite() || !k.im.is_finite() {
        return Ok(C64::new(sheet.sign(), 0.0));
    }
    if k.im == 0.0 && k.re >= x && k.re <= 1.0 - y {
        return Err(Error::BranchCut { k, lo: x, hi: 1.0 - y });
    }
    let ratio = (k - C64::new(1.0 - y, 0.0)) / (k - C64::new(x, 0.0));
    Ok(plus_root(ratio) * sheet.sign())
}

/// z = (1 + lambda)/(1 - lambda). lambda = 1 maps to infinity, lambda = inf to -1.
pub fn to_z(lambda: C64) -> C64 {
    if !lambda.re.is_finite() || !lambda.im.is_finite() {
        return C64::new(-1.0, 0.0);
    }
    if lambda == C64::new(1.0, 0.0) {
        return C64::new(f64::INFINITY, 0.0);
    }
    (C64::new(1.0, 0.0) + lambda) / (C64::new(1.0, 0.0) - lambda)
}

impl SurfacePoint {
    pub fn from_k(x: f64, y: f64, k: C64, sheet: Sheet) -> Result<SurfacePoint> {
        let lam = lambda(x, y, k, sheet)?;
        Ok(SurfacePoint { k, sheet, lambda: lam, z: to_z(lam) })
    }

    /// The point at infinity on the given sheet: lambda = +-1, z = inf resp. 0.
    pub fn infinity(sheet: Sheet) -> SurfacePoint {
        let lam = C64::new(sheet.sign(), 0.0);
        SurfacePoint {
            k: C64::new(f64::INFINITY, 0.0),
            sheet,
            lambda: lam,
            z: to_z(lam),
        }
    }
}

/// Invert the uniformizer: z -> (k, sheet) with to_z(lambda(k, sheet)) = z.
///
/// The sheet is read off the stored lambda: |z| > 1 is the plus sheet,
/// |z| < 1 the minus sheet, and points on the unit circle (purely imaginary
/// lambda) resolve ties towards Im(lambda) > 0.
pub fn from_z(x: f64, y: f64, z: C64) -> Result<SurfacePoint> {
    check_domain(x, y)?;
    if !z.re.is_finite() || !z.im.is_finite() {
        return Ok(SurfacePoint::infinity(Sheet::Plus));
    }
    if z == C64::new(1.0, 0.0) || z == C64::new(-1.0, 0.0) {
        // branch point; the sheet is undefined there
        return Err(Error::BranchCut {
            k: if z.re > 0.0 { C64::new(1.0 - y, 0.0) } else { C64::new(x, 0.0) },
            lo: x,
            hi: 1.0 - y,
        });
    }
    let lam = (z - 1.0) / (z + 1.0);
    let lam2 = lam * lam;
    let sheet = if lam.re > 0.0 || (lam.re == 0.0 && lam.im > 0.0) {
        Sheet::Plus
    } else {
        Sheet::Minus
    };
    let denom = lam2 - 1.0;
    if denom.norm() < 1e-300 {
        // lambda = -1 (z = 0) or lambda = 1 (z = inf): the points at infinity
        return Ok(SurfacePoint {
            k: C64::new(f64::INFINITY, 0.0),
            sheet,
            lambda: lam,
            z,
        });
    }
    let k = (lam2 * x - C64::new(1.0 - y, 0.0)) / denom;
    Ok(SurfacePoint { k, sheet, lambda: lam, z })
}

/// Outer endpoints of the branch-cut images.
///
/// The image of the x-side cut is the real segment [a0, 1/a0] around -1 with
/// a0 = (1 + L0)/(1 - L0), L0 = sqrt((1 - y)/x); the y-side image is
/// [1/a1, a1] around +1 with a1 = (L1 + 1)/(L1 - 1), L1 = sqrt((1 - x)/y).
pub fn cut_image_endpoints(x: f64, y: f64) -> Result<(f64, f64)> {
    check_domain(x, y)?;
    if x <= 0.0 {
        return Err(Error::Degenerate { axis: "x" });
    }
    if y <= 0.0 {
        return Err(Error::Degenerate { axis: "y" });
    }
    let l0 = ((1.0 - y) / x).sqrt();
    let l1 = ((1.0 - x) / y).sqrt();
    Ok(((1.0 + l0) / (1.0 - l0), (l1 + 1.0) / (l1 - 1.0)))
}

/// A circle with real center, orthogonal to the unit circle when
/// center^2 - radius^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: f64,
    pub radius: f64,
}

impl Circle {
    pub fn point(&self, theta: f64) -> C64 {
        C64::new(self.center, 0.0) + self.radius * C64::from_polar(1.0, theta)
    }

    /// Local coordinate (z - c)/r; |zeta| < 1 is the interior.
    pub fn zeta(&self, z: C64) -> C64 {
        (z - C64::new(self.center, 0.0)) / self.radius
    }

    pub fn contains(&self, z: C64) -> bool {
        self.zeta(z).norm() < 1.0
    }

    pub fn signed_distance(&self, z: C64) -> f64 {
        (z - C64::new(self.center, 0.0)).norm() - self.radius
    }

    /// center^2 - radius^2 - 1; zero for circles invariant under z -> 1/z.
    pub fn involution_defect(&self) -> f64 {
        self.center * self.center - self.radius * self.radius - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleId {
    Gamma0,
    Gamma1,
}

/// The two-loop collocation contour for one point (x, y), clockwise circles
/// with equispaced-in-angle nodes.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub x: f64,
    pub y: f64,
    pub gamma0: Circle,
    pub gamma1: Circle,
    pub nodes_per_circle: usize,
    pub margin_factor: f64,
    nodes0: Vec<C64>,
    nodes1: Vec<C64>,
    weights0: Vec<C64>,
    weights1: Vec<C64>,
}

const FALLBACK_RADIUS: f64 = 0.5;

/// Circle through the multiplicatively extended endpoints (g*a, 1/(g*a)).
/// Since the endpoints are reciprocal, center^2 - radius^2 = 1 exactly.
fn circle_through(extended: f64) -> Circle {
    let p = extended;
    let q = 1.0 / p;
    Circle { center: 0.5 * (p + q), radius: 0.5 * (q - p).abs() }
}

fn degenerate_circle(side: CircleId) -> Circle {
    // radius 0.5 around the collapsed branch point, center adjusted to keep
    // the circle orthogonal to the unit circle
    let c = (1.0 + FALLBACK_RADIUS * FALLBACK_RADIUS).sqrt();
    match side {
        CircleId::Gamma0 => Circle { center: -c, radius: FALLBACK_RADIUS },
        CircleId::Gamma1 => Circle { center: c, radius: FALLBACK_RADIUS },
    }
}

pub fn build_contour(x: f64, y: f64, n: usize, margin_factor: f64) -> Result<ContourSpec> {
    check_domain(x, y)?;
    if n < 4 {
        return Err(Error::ContourInfeasible(format!("need at least 4 nodes per circle, got {n}")));
    }
    if !(margin_factor > 1.0) || !margin_factor.is_finite() {
        return Err(Error::ContourInfeasible(format!(
            "margin factor must exceed 1, got {margin_factor}"
        )));
    }
    let gamma0 = if x <= 0.0 {
        degenerate_circle(CircleId::Gamma0)
    } else {
        let l0 = ((1.0 - y) / x).sqrt();
        circle_through(margin_factor * (1.0 + l0) / (1.0 - l0))
    };
    let gamma1 = if y <= 0.0 {
        degenerate_circle(CircleId::Gamma1)
    } else {
        let l1 = ((1.0 - x) / y).sqrt();
        circle_through(margin_factor * (l1 + 1.0) / (l1 - 1.0))
    };
    for (c, name) in [(gamma0, "gamma0"), (gamma1, "gamma1")] {
        if !c.center.is_finite() || !c.radius.is_finite() || c.radius <= 0.0 {
            return Err(Error::ContourInfeasible(format!(
                "{name} degenerates at ({x}, {y}): center {}, radius {}",
                c.center, c.radius
            )));
        }
        if c.center.abs() <= c.radius {
            return Err(Error::ContourInfeasible(format!("{name} touches the origin at ({x}, {y})")));
        }
    }
    if gamma0.center + gamma0.radius >= gamma1.center - gamma1.radius {
        return Err(Error::ContourInfeasible(format!("circles intersect at ({x}, {y})")));
    }

    let make_nodes = |c: &Circle| -> (Vec<C64>, Vec<C64>) {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        // clockwise orientation: dz carries the factor -2*pi*i*r*e^{i theta}/n
        let wfac = C64::new(0.0, -2.0 * PI * c.radius / n as f64);
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let e = C64::from_polar(1.0, theta);
            nodes.push(C64::new(c.center, 0.0) + c.radius * e);
            weights.push(wfac * e);
        }
        (nodes, weights)
    };
    let (nodes0, weights0) = make_nodes(&gamma0);
    let (nodes1, weights1) = make_nodes(&gamma1);

    Ok(ContourSpec {
        x,
        y,
        gamma0,
        gamma1,
        nodes_per_circle: n,
        margin_factor,
        nodes0,
        nodes1,
        weights0,
        weights1,
    })
}

impl ContourSpec {
    pub fn circle(&self, id: CircleId) -> &Circle {
        match id {
            CircleId::Gamma0 => &self.gamma0,
            CircleId::Gamma1 => &self.gamma1,
        }
    }

    pub fn nodes(&self, id: CircleId) -> &[C64] {
        match id {
            CircleId::Gamma0 => &self.nodes0,
            CircleId::Gamma1 => &self.nodes1,
        }
    }

    pub fn weights(&self, id: CircleId) -> &[C64] {
        match id {
            CircleId::Gamma0 => &self.weights0,
            CircleId::Gamma1 => &self.weights1,
        }
    }

    /// Total node count (both circles).
    pub fn total_nodes(&self) -> usize {
        2 * self.nodes_per_circle
    }

    /// Smallest distance from z to either circle, relative to its radius.
    pub fn relative_distance(&self, z: C64) -> f64 {
        let d0 = self.gamma0.signed_distance(z).abs() / self.gamma0.radius;
        let d1 = self.gamma1.signed_distance(z).abs() / self.gamma1.radius;
        d0.min(d1)
    }
}

/// lambda(s, 0, .) evaluated at the preimage of a fixed contour node z of the
/// surface of (x, y), as a smooth function of the integration parameter s.
///
/// Writing everything in z removes the sheet bookkeeping: with
/// N(z) = (z - n1)(z - n2) (roots: images of the lifts of k = 1) and
/// D_s(z) = (z - d1(s))(z - d2(s)) (roots: images of the lifts of k = s),
/// lambda = sqrt(z - n1) sqrt(z - n2) / (sqrt(z - d1) sqrt(z - d2)), with all
/// principal roots. Both cuts stay away from the Gamma0 circle, so the value
/// is smooth in z there, including across the unit circle.
#[derive(Debug, Clone, Copy)]
pub struct NodeLambdaX {
    x: f64,
    y: f64,
    z: C64,
    s_num: C64,
}

fn split_sqrt(z: C64, r1: f64, r2: f64) -> C64 {
    (z - C64::new(r1, 0.0)).sqrt() * (z - C64::new(r2, 0.0)).sqrt()
}

impl NodeLambdaX {
    pub fn new(x: f64, y: f64, z: C64) -> NodeLambdaX {
        let g0 = (y / (1.0 - x)).sqrt();
        let s_num = if g0 == 0.0 {
            z - 1.0
        } else {
            let n1 = (1.0 + g0) / (1.0 - g0);
            split_sqrt(z, n1, 1.0 / n1)
        };
        NodeLambdaX { x, y, z, s_num }
    }

    pub fn eval(&self, s: f64) -> C64 {
        let denom = if s >= self.x {
            self.z + 1.0
        } else {
            let l = ((1.0 - self.y - s) / (self.x - s)).sqrt();
            if l.is_finite() {
                let d1 = (1.0 + l) / (1.0 - l);
                split_sqrt(self.z, d1, 1.0 / d1)
            } else {
                self.z + 1.0
            }
        };
        self.s_num / denom
    }
}

/// 1/lambda(0, s, .) at the preimage of a fixed Gamma1 node z, smooth in the
/// integration parameter s; mirror of [`NodeLambdaX`].
#[derive(Debug, Clone, Copy)]
pub struct NodeInvLambdaY {
    x: f64,
    y: f64,
    z: C64,
    s_num: C64,
}

impl NodeInvLambdaY {
    pub fn new(x: f64, y: f64, z: C64) -> NodeInvLambdaY {
        let s_num = if x <= 0.0 {
            z + 1.0
        } else {
            let l0 = ((1.0 - y) / x).sqrt();
            if l0.is_finite() {
                let m1 = (1.0 + l0) / (1.0 - l0);
                split_sqrt(z, m1, 1.0 / m1)
            } else {
                z + 1.0
            }
        };
        NodeInvLambdaY { x, y, z, s_num }
    }

    pub fn eval(&self, s: f64) -> C64 {
        let denom = if s >= self.y {
            self.z - 1.0
        } else {
            let g = ((self.y - s) / (1.0 - self.x - s)).sqrt();
            if g == 0.0 {
                self.z - 1.0
            } else {
                let q1 = (1.0 + g) / (1.0 - g);
                split_sqrt(self.z, q1, 1.0 / q1)
            }
        };
        self.s_num / denom
    }
}

/// Sheet-resolved lambda(s, 0, k) for a spectral point given directly by k.
pub fn lambda_x_axis(k: C64, sheet: Sheet, s: f64) -> C64 {
    if !k.re.is_finite() || !k.im.is_finite() {
        return C64::new(sheet.sign(), 0.0);
    }
    plus_root((k - 1.0) / (k - C64::new(s, 0.0))) * sheet.sign()
}

/// Sheet-resolved 1/lambda(0, s, k).
pub fn inv_lambda_y_axis(k: C64, sheet: Sheet, s: f64) -> C64 {
    if !k.re.is_finite() || !k.im.is_finite() {
        return C64::new(sheet.sign(), 0.0);
    }
    if k.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    plus_root(k / (k - C64::new(1.0 - s, 0.0))) * sheet.sign()
}
