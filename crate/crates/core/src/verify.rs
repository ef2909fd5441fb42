//! Residual and identity checks: the coupled field equations, the
//! zero-curvature identity of the Lax pair, the corner-limit formulas for the
//! normal derivatives, the wavefront functionals, and the admissibility
//! window.

use crate::boundary::BoundaryProfile;
use crate::error::{Error, Result};
use crate::linalg::{C64, Mat3, I, ONE};
use crate::surface;
use crate::volterra::SparseFrame;
use serde::Serialize;

/// Potential values on a uniform tensor grid; unsolved points are None and
/// excluded from every stencil.
pub struct FieldPatch {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Option<(C64, C64)>>,
}

impl FieldPatch {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<Option<(C64, C64)>>) -> FieldPatch {
        assert_eq!(values.len(), xs.len() * ys.len());
        FieldPatch { xs, ys, values }
    }

    fn at(&self, i: usize, j: usize) -> Option<(C64, C64)> {
        self.values[j * self.xs.len() + i]
    }

    fn spacing(&self) -> Result<(f64, f64)> {
        let check = |v: &[f64], name: &str| -> Result<f64> {
            if v.len() < 2 {
                return Err(Error::GridTooCoarse(format!("{name} axis has {} points", v.len())));
            }
            let h = v[1] - v[0];
            for w in v.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-12 * h.abs().max(1e-12) {
                    return Err(Error::GridTooCoarse(format!("{name} axis is not uniform")));
                }
            }
            Ok(h)
        };
        Ok((check(&self.xs, "x")?, check(&self.ys, "y")?))
    }
}

/// Residuals of the two coupled equations from pointwise values and
/// derivatives; zero exactly on solutions.
#[allow(clippy::too_many_arguments)]
pub fn residual_at(
    e: C64,
    h: C64,
    e_x: C64,
    e_y: C64,
    e_xy: C64,
    h_x: C64,
    h_y: C64,
    h_xy: C64,
    x: f64,
    y: f64,
) -> (C64, C64) {
    let f = e.re - h.norm_sqr();
    let geo = 1.0 / (2.0 * (1.0 - x - y));
    let r1 = f * (e_xy - (e_x + e_y) * geo) - e_x * e_y + h.conj() * (e_x * h_y + e_y * h_x);
    let r2 = f * (h_xy - (h_x + h_y) * geo) - 0.5 * (e_x * h_y + e_y * h_x)
        + 2.0 * h.conj() * h_x * h_y;
    (r1, r2)
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub rms: f64,
    pub points: usize,
}

fn stats(vals: &[f64]) -> ResidualStats {
    if vals.is_empty() {
        return ResidualStats::default();
    }
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let rms = (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt();
    ResidualStats { max, rms, points: vals.len() }
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// Fourth-order centered first derivative along x at (i, j); None when the
/// stencil leaves the grid or crosses an unsolved point.
fn dx_at(p: &FieldPatch, i: usize, j: usize, h: f64, pick: fn((C64, C64)) -> C64) -> Option<C64> {
    if i < 2 || i + 2 >= p.xs.len() {
        return None;
    }
    let mut acc = C64::new(0.0, 0.0);
    for (o, c) in D1.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        acc += *c * pick(p.at(i + o - 2, j)?);
    }
    Some(acc / h)
}

fn dy_at(p: &FieldPatch, i: usize, j: usize, h: f64, pick: fn((C64, C64)) -> C64) -> Option<C64> {
    if j < 2 || j + 2 >= p.ys.len() {
        return None;
    }
    let mut acc = C64::new(0.0, 0.0);
    for (o, c) in D1.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        acc += *c * pick(p.at(i, j + o - 2)?);
    }
    Some(acc / h)
}

fn dxy_at(p: &FieldPatch, i: usize, j: usize, hx: f64, hy: f64, pick: fn((C64, C64)) -> C64) -> Option<C64> {
    if j < 2 || j + 2 >= p.ys.len() {
        return None;
    }
    let mut acc = C64::new(0.0, 0.0);
    for (o, c) in D1.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        // x-derivative of each y-stencil row
        acc += *c * dx_at_row(p, i, j + o - 2, hx, pick)?;
    }
    Some(acc / hy)
}

fn dx_at_row(p: &FieldPatch, i: usize, j: usize, h: f64, pick: fn((C64, C64)) -> C64) -> Option<C64> {
    dx_at(p, i, j, h, pick)
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeResiduals {
    pub r1: ResidualStats,
    pub r2: ResidualStats,
}

/// Fourth-order finite-difference residuals of the coupled equations over
/// all interior points with complete stencils.
pub fn pde_residual(patch: &FieldPatch) -> Result<PdeResiduals> {
    let (hx, hy) = patch.spacing()?;
    let (nx, ny) = (patch.xs.len(), patch.ys.len());
    if nx < 9 || ny < 9 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 5 interior points per axis, grid is {nx} x {ny}"
        )));
    }
    let pe = |v: (C64, C64)| v.0;
    let ph = |v: (C64, C64)| v.1;
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for j in 2..ny - 2 {
        for i in 2..nx - 2 {
            let Some((e, h)) = patch.at(i, j) else { continue };
            let parts = (|| {
                Some((
                    dx_at(patch, i, j, hx, pe)?,
                    dy_at(patch, i, j, hy, pe)?,
                    dxy_at(patch, i, j, hx, hy, pe)?,
                    dx_at(patch, i, j, hx, ph)?,
                    dy_at(patch, i, j, hy, ph)?,
                    dxy_at(patch, i, j, hx, hy, ph)?,
                ))
            })();
            let Some((ex, ey, exy, hxo, hyo, hxyo)) = parts else { continue };
            let (a, b) = residual_at(e, h, ex, ey, exy, hxo, hyo, hxyo, patch.xs[i], patch.ys[j]);
            r1.push(a.norm());
            r2.push(b.norm());
        }
    }
    if r1.is_empty() {
        return Err(Error::GridTooCoarse("no interior point has a complete stencil".into()));
    }
    Ok(PdeResiduals { r1: stats(&r1), r2: stats(&r2) })
}

/// Max norm of U_y - V_x + [U, V] over the patch, with the full Lax matrices
/// assembled at a fixed spectral point from finite-difference field
/// derivatives. The spectral point is the preimage of `z_sample` on the
/// surface of the patch center.
pub fn zero_curvature(patch: &FieldPatch, z_sample: C64) -> Result<f64> {
    let (hx, hy) = patch.spacing()?;
    let (nx, ny) = (patch.xs.len(), patch.ys.len());
    if nx < 9 || ny < 9 {
        return Err(Error::GridTooCoarse(format!("grid is {nx} x {ny}")));
    }
    let xc = 0.5 * (patch.xs[0] + patch.xs[nx - 1]);
    let yc = 0.5 * (patch.ys[0] + patch.ys[ny - 1]);
    let point = surface::from_z(xc, yc, z_sample)?;
    let (k, sheet) = (point.k, point.sheet);

    // Lax matrices on the grid
    let pe = |v: (C64, C64)| v.0;
    let ph = |v: (C64, C64)| v.1;
    let mut us: Vec<Option<Mat3>> = vec![None; nx * ny];
    let mut vs: Vec<Option<Mat3>> = vec![None; nx * ny];
    for j in 2..ny - 2 {
        for i in 2..nx - 2 {
            let Some((e, h)) = patch.at(i, j) else { continue };
            let Some(ex) = dx_at(patch, i, j, hx, pe) else { continue };
            let Some(ey) = dy_at(patch, i, j, hy, pe) else { continue };
            let Some(hxd) = dx_at(patch, i, j, hx, ph) else { continue };
            let Some(hyd) = dy_at(patch, i, j, hy, ph) else { continue };
            let f = e.re - h.norm_sqr();
            if !(f > 0.0) {
                return Err(Error::Positivity(format!("f = {f} inside the patch")));
            }
            let lam = surface::lambda(patch.xs[i], patch.ys[j], k, sheet)?;
            let a = (ex - 2.0 * h.conj() * hxd) / (2.0 * f);
            let b = (ey - 2.0 * h.conj() * hyd) / (2.0 * f);
            let sf = f.sqrt();
            us[j * nx + i] = Some(lax_full(a, hxd / sf, lam));
            vs[j * nx + i] = Some(lax_full(b, hyd / sf, ONE / lam));
        }
    }

    let get = |arr: &Vec<Option<Mat3>>, i: usize, j: usize| -> Option<Mat3> { arr[j * nx + i] };
    let mut worst: Option<f64> = None;
    for j in 4..ny - 4 {
        for i in 4..nx - 4 {
            let (Some(u), Some(v)) = (get(&us, i, j), get(&vs, i, j)) else { continue };
            let mut uy = Mat3::zero();
            let mut vx = Mat3::zero();
            let mut complete = true;
            for (o, c) in D1.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                match (get(&us, i, j + o - 2), get(&vs, i + o - 2, j)) {
                    (Some(un), Some(vn)) => {
                        uy = uy.add(&un.scale(C64::new(*c / hy, 0.0)));
                        vx = vx.add(&vn.scale(C64::new(*c / hx, 0.0)));
                    }
                    _ => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue;
            }
            let defect = uy.sub(&vx).add(&u.commutator(&v)).max_abs();
            worst = Some(worst.map_or(defect, |w: f64| w.max(defect)));
        }
    }
    worst.ok_or_else(|| Error::GridTooCoarse("no point with a complete curvature stencil".into()))
}

/// Full interior Lax matrix with coefficient a, weighted derivative hw and
/// spectral factor lam (lambda for the x-direction, 1/lambda for y).
fn lax_full(a: C64, hw: C64, lam: C64) -> Mat3 {
    Mat3::from_rows(
        [a.conj(), lam * a.conj(), I * hw],
        [lam * a, a, -I * lam * hw],
        [I * hw.conj(), I * lam * hw.conj(), C64::new(a.re, 0.0)],
    )
}

/// A corner limit with a self-reported extrapolation band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitEstimate {
    pub value_re: f64,
    pub value_im: f64,
    pub band: f64,
}

impl LimitEstimate {
    pub fn value(&self) -> C64 {
        C64::new(self.value_re, self.value_im)
    }
}

/// Estimate lim s^alpha dg/ds at s = 0 from samples along a geometric
/// sequence s_j = s0 2^{-j}: difference quotients in tau = s^{1-alpha} /
/// (1-alpha) followed by two-term Richardson extrapolation. The band is the
/// last extrapolation increment.
pub fn corner_limit(
    eval: &mut dyn FnMut(f64) -> Result<C64>,
    alpha: f64,
    s0: f64,
    levels: usize,
) -> Result<LimitEstimate> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::ExtrapolationUnstable(format!("alpha = {alpha} outside [0, 1)")));
    }
    let base = eval(0.0)?;
    let mut taus = Vec::new();
    let mut quotients = Vec::new();
    for j in 0..=levels {
        let s = s0 * 0.5f64.powi(j as i32);
        let tau = s.powf(1.0 - alpha) / (1.0 - alpha);
        let g = eval(s)?;
        taus.push(tau);
        quotients.push((g - base) / tau);
    }
    // eliminate the O(tau) term pairwise
    let mut extr = Vec::new();
    for j in 0..quotients.len() - 1 {
        let r = taus[j + 1] / taus[j];
        extr.push((quotients[j + 1] - quotients[j] * r) / (1.0 - r));
    }
    let m = extr.len();
    if m < 2 {
        return Err(Error::ExtrapolationUnstable("need at least two levels".into()));
    }
    let bands: Vec<f64> = (1..m).map(|j| (extr[j] - extr[j - 1]).norm()).collect();
    let band = *bands.last().unwrap();
    if m >= 4 {
        let b = &bands[m - 4..];
        if b[2] > 4.0 * b[1] && b[1] > 4.0 * b[0] && b[2] > 1e-12 {
            return Err(Error::ExtrapolationUnstable(format!(
                "increments grow: {:?}",
                b
            )));
        }
    }
    let v = extr[m - 1];
    Ok(LimitEstimate { value_re: v.re, value_im: v.im, band: band.max(1e-15) })
}

/// Right-hand sides of the corner-derivative formulas for the limits
/// x -> 0 of x^alpha E_x and x^alpha H_x at height y (mirror for the other
/// axis by passing the x-axis profile and frame).
pub fn corner_rhs(
    transverse: &BoundaryProfile,
    s: f64,
    m_limit: C64,
    n_limit: C64,
    frame: &SparseFrame,
) -> (C64, C64) {
    let f = transverse.f(s);
    let h = transverse.h(s);
    let sf = f.sqrt();
    let root = (1.0 - s).sqrt();
    let c = frame.c;
    let shared = I * m_limit * frame.d.conj() + 2.0 * frame.e.conj() * n_limit;
    let rhs_h = c * shared / (2.0 * sf * root);
    let rhs_e = c * (shared * h.conj() + c * (frame.e * m_limit + 2.0 * I * frame.d * n_limit))
        / (sf * root);
    (rhs_e, rhs_h)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FunctionalEstimate {
    pub value: f64,
    pub uncertainty: f64,
}

/// The wavefront functional at height y from the extrapolated corner limits:
/// (1-y) (|L_E - 2 conj(H1) L_H|^2 / f1^2 + 4 |L_H|^2 / f1), equal to
/// |m|^2 + 4|n|^2 when alpha = 1/2.
pub fn boundary_functional(
    transverse: &BoundaryProfile,
    s: f64,
    lim_e: &LimitEstimate,
    lim_h: &LimitEstimate,
) -> FunctionalEstimate {
    let f = transverse.f(s);
    let h = transverse.h(s);
    let le = lim_e.value();
    let lh = lim_h.value();
    let mix = le - 2.0 * h.conj() * lh;
    let value = (1.0 - s) * (mix.norm_sqr() / (f * f) + 4.0 * lh.norm_sqr() / f);
    // first-order propagation of the extrapolation bands
    let dmix = lim_e.band + 2.0 * h.norm() * lim_h.band;
    let uncertainty =
        (1.0 - s) * (2.0 * mix.norm() * dmix / (f * f) + 8.0 * lh.norm() * lim_h.band / f);
    FunctionalEstimate { value, uncertainty: uncertainty.max(1e-14) }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdmissibilityReport {
    pub value_x: f64,
    pub value_y: f64,
    pub admissible_x: bool,
    pub admissible_y: bool,
    pub admissible: bool,
}

/// The wavefront window: both |m|^2 + 4|n|^2 values must lie in [1, 2).
pub fn admissibility(m1: C64, n1: C64, m2: C64, n2: C64) -> AdmissibilityReport {
    let value_x = m1.norm_sqr() + 4.0 * n1.norm_sqr();
    let value_y = m2.norm_sqr() + 4.0 * n2.norm_sqr();
    let ok = |v: f64| (1.0..2.0).contains(&v);
    AdmissibilityReport {
        value_x,
        value_y,
        admissible_x: ok(value_x),
        admissible_y: ok(value_y),
        admissible: ok(value_x) && ok(value_y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Axis;
    use crate::exact::{self, FamilyParams};
    use crate::linalg::ZERO;

    /// n x n patch of exact-family values centered at (xc, yc).
    fn family_patch(fam: &FamilyParams, xc: f64, yc: f64, h: f64, n: usize) -> FieldPatch {
        let half = (n - 1) as f64 / 2.0;
        let xs: Vec<f64> = (0..n).map(|i| xc + h * (i as f64 - half)).collect();
        let ys: Vec<f64> = (0..n).map(|j| yc + h * (j as f64 - half)).collect();
        let mut values = Vec::with_capacity(n * n);
        for &y in &ys {
            for &x in &xs {
                let p = exact::potentials(fam, x, y);
                values.push(Some((p.e, p.h)));
            }
        }
        FieldPatch::new(xs, ys, values)
    }

    #[test]
    fn closed_form_derivatives_annihilate_residual() {
        let fam = FamilyParams::new(0.6, 0.8).unwrap();
        for &(x, y) in &[(0.2, 0.3), (0.11, 0.52), (0.4, 0.17)] {
            let p = exact::potentials(&fam, x, y);
            let (hx, hy, hxy) = exact::h_derivatives(&fam, x, y);
            let (r1, r2) = residual_at(p.e, p.h, ZERO, ZERO, ZERO, hx, hy, hxy, x, y);
            assert!(r1.norm() < 1e-13, "r1 = {r1} at ({x}, {y})");
            assert!(r2.norm() < 1e-13, "r2 = {r2} at ({x}, {y})");
        }
    }

    #[test]
    fn non_solution_detected() {
        // E = 1 + x y, H = 0 is not a solution: r1 = f d^2/dxdy(xy) - y x = f - xy
        let (x, y) = (0.2, 0.25);
        let e = C64::new(1.0 + x * y, 0.0);
        let (r1, r2) = residual_at(
            e,
            ZERO,
            C64::new(y, 0.0),
            C64::new(x, 0.0),
            ONE,
            ZERO,
            ZERO,
            ZERO,
            x,
            y,
        );
        let f = 1.0 + x * y;
        let geo = (x + y) / (2.0 * (1.0 - x - y));
        let expect = f * (1.0 - geo) - x * y;
        assert!((r1 - C64::new(expect, 0.0)).norm() < 1e-13);
        assert!(r2.norm() < 1e-15);
    }

    #[test]
    fn fd_residual_fourth_order() {
        let fam = FamilyParams::bell_szekeres();
        let mut maxes = Vec::new();
        for &h in &[0.02, 0.01, 0.005] {
            let patch = family_patch(&fam, 0.23, 0.2, h, 9);
            let r = pde_residual(&patch).unwrap();
            maxes.push(r.r2.max);
        }
        let order1 = (maxes[0] / maxes[1]).log2();
        let order2 = (maxes[1] / maxes[2]).log2();
        assert!(order1 > 3.5 && order2 > 3.5, "orders {order1:.2}, {order2:.2} ({maxes:?})");
        // constant fields have zero residual
        let xs: Vec<f64> = (0..9).map(|i| 0.1 + 0.01 * i as f64).collect();
        let flat = FieldPatch::new(xs.clone(), xs, vec![Some((ONE, ZERO)); 81]);
        let r = pde_residual(&flat).unwrap();
        assert!(r.r1.max < 1e-11 && r.r2.max < 1e-11, "{} {}", r.r1.max, r.r2.max);
    }

    #[test]
    fn zero_curvature_fourth_order() {
        let fam = FamilyParams::new(0.0, 1.0).unwrap();
        let z = C64::new(0.0, 1.3);
        let mut maxes = Vec::new();
        for &h in &[0.02, 0.01] {
            let patch = family_patch(&fam, 0.26, 0.22, h, 13);
            maxes.push(zero_curvature(&patch, z).unwrap());
        }
        let order = (maxes[0] / maxes[1]).log2();
        assert!(order > 3.4, "order {order:.2} ({maxes:?})");
        // trivial fields: exactly flat
        let xs: Vec<f64> = (0..9).map(|i| 0.1 + 0.01 * i as f64).collect();
        let flat = FieldPatch::new(xs.clone(), xs, vec![Some((ONE, ZERO)); 81]);
        assert!(zero_curvature(&flat, z).unwrap() < 1e-11);
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let xs: Vec<f64> = (0..5).map(|i| 0.1 + 0.02 * i as f64).collect();
        let patch = FieldPatch::new(xs.clone(), xs, vec![Some((ONE, ZERO)); 25]);
        assert!(matches!(pde_residual(&patch), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn corner_limit_recovers_family_constant() {
        // lim x^{1/2} H_x(x, y) = n1 sqrt(1 - y) for the family
        let fam = FamilyParams::new(0.6, 0.8).unwrap();
        let y = 0.36;
        let mut eval = |x: f64| -> Result<C64> { Ok(exact::h_value(&fam, x, y)) };
        let est = corner_limit(&mut eval, 0.5, 0.05, 8).unwrap();
        let expect = exact::boundary_constants(&fam).n1 * (1.0 - y).sqrt();
        assert!(
            (est.value() - expect).norm() < 20.0 * est.band.max(1e-12),
            "est {} vs {expect}, band {}",
            est.value(),
            est.band
        );
        assert!((est.value() - expect).norm() < 1e-6);
    }

    #[test]
    fn corner_rhs_matches_family() {
        // both sides of the H-limit identity, all pieces computed
        // independently (frame by integration, limit by extrapolation)
        let fam = FamilyParams::new(0.6, 0.8).unwrap();
        let y = 0.36;
        let prof_y = exact::profile(&fam, Axis::Y);
        let frame = crate::volterra::frame_at_zero(&prof_y, y, &Default::default()).unwrap();
        let consts = exact::boundary_constants(&fam);
        let (rhs_e, rhs_h) = corner_rhs(&prof_y, y, consts.m1, consts.n1, &frame);
        let expect_h = consts.n1 * (1.0 - y).sqrt();
        assert!((rhs_h - expect_h).norm() < 1e-8, "rhs_h {rhs_h} vs {expect_h}");
        assert!(rhs_e.norm() < 1e-8, "rhs_e {rhs_e}");
    }

    #[test]
    fn functional_and_admissibility() {
        let fam = FamilyParams::new(0.28, 0.96).unwrap();
        let y = 0.2;
        let prof_y = exact::profile(&fam, Axis::Y);
        let mut eval_e = |_x: f64| -> Result<C64> { Ok(ONE) };
        let mut eval_h = |x: f64| -> Result<C64> { Ok(exact::h_value(&fam, x, y)) };
        let le = corner_limit(&mut eval_e, 0.5, 0.05, 8).unwrap();
        let lh = corner_limit(&mut eval_h, 0.5, 0.05, 8).unwrap();
        let fe = boundary_functional(&prof_y, y, &le, &lh);
        assert!((fe.value - 1.0).abs() < 1e-5, "functional {}", fe.value);

        let c = exact::boundary_constants(&fam);
        let rep = admissibility(c.m1, c.n1, c.m2, c.n2);
        assert!(rep.admissible && (rep.value_x - 1.0).abs() < 1e-12);
        let bad = admissibility(C64::new(2.0, 0.0), ZERO, ZERO, ZERO);
        assert!(!bad.admissible_x && (bad.value_x - 4.0).abs() < 1e-12);
        let small = admissibility(ZERO, ZERO, ZERO, ZERO);
        assert!(!small.admissible);
    }
}
