#![allow(dead_code, clippy::excessive_precision, clippy::needless_range_loop)] // each test binary uses its own subset

//! Shared helpers for the integration and acceptance suites, including the
//! successive-approximation oracle for the boundary frames. The oracle
//! shares no code with the adaptive integrator: iterated panel quadrature
//! over Chebyshev interpolants versus an embedded Runge-Kutta pair.

use ernstmx_core::boundary::{axis_coefficients, lax_matrix, Axis, BoundaryProfile};
use ernstmx_core::linalg::{C64, Mat3};
use ernstmx_core::surface::{self, Sheet};
use ernstmx_core::volterra::SpectralTarget;

/// 16-point Gauss-Legendre rule on [-1, 1].
const GL_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn gauss16(f: &mut dyn FnMut(f64) -> Mat3, a: f64, b: f64) -> Mat3 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = Mat3::zero();
    for i in 0..8 {
        let xp = mid + half * GL_X[i];
        let xm = mid - half * GL_X[i];
        acc = acc.add(&f(xp).add(&f(xm)).scale(C64::new(GL_W[i] * half, 0.0)));
    }
    acc
}

struct Cheb {
    nodes: Vec<f64>,
}

impl Cheb {
    fn new(u_end: f64, m: usize) -> Cheb {
        let nodes = (0..m)
            .map(|i| u_end * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (m - 1) as f64).cos()))
            .collect();
        Cheb { nodes }
    }

    /// Barycentric interpolation with Chebyshev-Lobatto weights.
    fn interp(&self, values: &[Mat3], u: f64) -> Mat3 {
        let m = self.nodes.len();
        let mut num = Mat3::zero();
        let mut den = C64::new(0.0, 0.0);
        for i in 0..m {
            let d = u - self.nodes[i];
            if d.abs() < 1e-300 {
                return values[i];
            }
            let mut w = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == m - 1 {
                w *= 0.5;
            }
            let t = C64::new(w / d, 0.0);
            num = num.add(&values[i].scale(t));
            den += t;
        }
        num.scale(C64::new(1.0, 0.0) / den)
    }
}

fn lambda_at(profile: &BoundaryProfile, target: &SpectralTarget, s: f64) -> C64 {
    match (target, profile.axis) {
        (SpectralTarget::InfinityPlus, _) => C64::new(1.0, 0.0),
        (SpectralTarget::InfinityMinus, _) => C64::new(-1.0, 0.0),
        (SpectralTarget::DirectK { k, sheet }, Axis::X) => surface::lambda_x_axis(*k, *sheet, s),
        (SpectralTarget::DirectK { k, sheet }, Axis::Y) => surface::inv_lambda_y_axis(*k, *sheet, s),
        (SpectralTarget::ContourNode { z, x, y }, Axis::X) => {
            surface::NodeLambdaX::new(*x, *y, *z).eval(s)
        }
        (SpectralTarget::ContourNode { z, x, y }, Axis::Y) => {
            surface::NodeInvLambdaY::new(*x, *y, *z).eval(s)
        }
    }
}

/// Truncated series of iterated integrals for the boundary frame: term j is
/// the j-fold ordered integral of the coefficient matrix, computed by
/// Gauss-Legendre panels over Chebyshev interpolants of the previous term.
pub fn successive_approximation_frame(
    profile: &BoundaryProfile,
    s_end: f64,
    target: &SpectralTarget,
    terms: usize,
    grid: usize,
) -> Mat3 {
    let u_end = profile.u_of_s(s_end);
    let cheb = Cheb::new(u_end, grid);
    let coeff = |u: f64| -> Mat3 {
        let vals = profile.values_at_u(u);
        let co = axis_coefficients(&vals);
        let s = profile.s_of_u(u);
        lax_matrix(&co, lambda_at(profile, target, s))
    };
    let mut total = vec![Mat3::identity(); grid];
    let mut prev = vec![Mat3::identity(); grid];
    for _ in 1..=terms {
        let mut next = Vec::with_capacity(grid);
        for (i, &ui) in cheb.nodes.iter().enumerate() {
            let _ = i;
            // two panels per target keep the quadrature spectral
            let mut f = |u: f64| coeff(u).mul(&cheb.interp(&prev, u));
            let half = 0.5 * ui;
            let val = gauss16(&mut f, 0.0, half).add(&gauss16(&mut f, half, ui));
            next.push(val);
        }
        for i in 0..grid {
            total[i] = total[i].add(&next[i]);
        }
        prev = next;
    }
    total[grid - 1]
}

/// Max-abs difference of two matrices.
pub fn mdiff(a: &Mat3, b: &Mat3) -> f64 {
    a.sub(b).max_abs()
}

/// Deterministic admissible spectral parameter away from [0, 1].
pub fn random_k(rng: &mut ernstmx_core::linalg::Rng64) -> C64 {
    loop {
        let k = C64::new(rng.range(-2.5, 3.5), rng.range(-2.0, 2.0));
        if k.im.abs() > 5e-2 {
            return k;
        }
    }
}

pub fn random_sheet(rng: &mut ernstmx_core::linalg::Rng64) -> Sheet {
    if rng.next_f64() < 0.5 {
        Sheet::Plus
    } else {
        Sheet::Minus
    }
}
