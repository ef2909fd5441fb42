//! Discrete Cauchy transforms on the two-circle contour.
//!
//! Per circle, functions are represented by Laurent modes in the local
//! coordinate zeta = (z - c)/r. For the clockwise orientation the Cauchy
//! integral of the mode zeta^n is -zeta^n inside for n >= 0, +zeta^n outside
//! for n < 0, and zero otherwise; boundary values, off-contour evaluation and
//! the cross-circle coupling are all assembled from these mode sums, which
//! stay accurate even when the evaluation point is close to a circle (the
//! circles pass near the origin when the cut images stretch out, so plain
//! quadrature in z would lose all accuracy exactly where m(0) is read off).
//! C_+ - C_- = id holds exactly by construction.

use crate::error::{Error, Result};
use crate::linalg::{C64, Mat3, Rng64, ONE, ZERO};
use crate::surface::{Circle, CircleId, ContourSpec};
use std::f64::consts::PI;
use std::sync::Arc;

/// In-place radix-2 FFT; falls back to a naive DFT for other lengths.
/// Forward transform uses e^{-i n theta}; `inverse` includes the 1/n factor.
pub fn fft(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if !n.is_power_of_two() {
        let sign = if inverse { 1.0 } else { -1.0 };
        let out: Vec<C64> = (0..n)
            .map(|k| {
                let mut s = ZERO;
                for (j, &v) in buf.iter().enumerate() {
                    let ang = sign * 2.0 * PI * (k * j % n) as f64 / n as f64;
                    s += v * C64::from_polar(1.0, ang);
                }
                s
            })
            .collect();
        for (b, o) in buf.iter_mut().zip(out) {
            *b = if inverse { o / n as f64 } else { o };
        }
        return;
    }
    // bit reversal
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let wl = C64::from_polar(1.0, ang);
        for start in (0..n).step_by(len) {
            let mut w = ONE;
            for i in 0..len / 2 {
                let u = buf[start + i];
                let v = buf[start + i + len / 2] * w;
                buf[start + i] = u + v;
                buf[start + i + len / 2] = u - v;
                w *= wl;
            }
        }
        len <<= 1;
    }
    if inverse {
        let inv = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= inv;
        }
    }
}

/// Laurent modes of a matrix-valued function on one circle, in FFT index
/// order (index j holds mode j for j < n/2, mode j - n otherwise).
#[derive(Debug, Clone)]
pub struct CircleModes {
    pub circle: Circle,
    pub coef: Vec<Mat3>,
}

/// Signed mode number for FFT index j.
#[inline]
fn mode_of(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub fn circle_modes(circle: &Circle, samples: &[Mat3]) -> CircleModes {
    let n = samples.len();
    let mut work = vec![ZERO; n];
    let mut coef = vec![Mat3::zero(); n];
    for r in 0..3 {
        for c in 0..3 {
            for j in 0..n {
                work[j] = samples[j].at(r, c);
            }
            fft(&mut work, false);
            for j in 0..n {
                coef[j].set(r, c, work[j] / n as f64);
            }
        }
    }
    CircleModes { circle: *circle, coef }
}

impl CircleModes {
    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    /// Value of the clockwise Cauchy integral of this circle's density at a
    /// point off the circle (interior or exterior mode sum by Horner).
    pub fn cauchy_at(&self, z: C64) -> Mat3 {
        let n = self.len();
        let zeta = self.circle.zeta(z);
        if zeta.norm() < 1.0 {
            // -(sum_{n >= 0} c_n zeta^n)
            let mut acc = Mat3::zero();
            for j in (0..n / 2).rev() {
                acc = acc.scale(zeta).add(&self.coef[j]);
            }
            acc.scale(-ONE)
        } else {
            // +(sum_{n < 0} c_n zeta^n)
            let w = ONE / zeta;
            let mut acc = Mat3::zero();
            for j in n / 2..n {
                // indices n/2..n hold modes -(n/2)..-1 in increasing order
                acc = acc.add(&self.coef[j].scale(pow_i(w, -(mode_of(j, n)) as u32)));
            }
            acc
        }
    }

    /// Trigonometric interpolation of the density itself at angle theta.
    pub fn interp(&self, theta: f64) -> Mat3 {
        let n = self.len();
        let mut acc = Mat3::zero();
        for j in 0..n {
            let m = mode_of(j, n);
            acc = acc.add(&self.coef[j].scale(C64::from_polar(1.0, m as f64 * theta)));
        }
        acc
    }

    /// Interior (minus-side) boundary value of the Cauchy integral at angle
    /// theta: -(sum of non-negative modes).
    pub fn minus_boundary_at(&self, theta: f64) -> Mat3 {
        let n = self.len();
        let mut acc = Mat3::zero();
        for j in 0..n / 2 {
            acc = acc.add(&self.coef[j].scale(C64::from_polar(1.0, mode_of(j, n) as f64 * theta)));
        }
        acc.scale(-ONE)
    }

    /// Node samples synthesized from the modes (inverse transform).
    pub fn samples(&self) -> Vec<Mat3> {
        let n = self.len();
        let mut out = vec![Mat3::zero(); n];
        let mut work = vec![ZERO; n];
        for r in 0..3 {
            for c in 0..3 {
                for j in 0..n {
                    work[j] = self.coef[j].at(r, c);
                }
                fft(&mut work, true);
                for j in 0..n {
                    out[j].set(r, c, work[j] * n as f64);
                }
            }
        }
        out
    }

    /// Relative size of the extreme retained modes; the resolution check.
    pub fn resolution_defect(&self) -> f64 {
        let n = self.len();
        let scale = self
            .coef
            .iter()
            .map(Mat3::max_abs)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let top = self.coef[n / 2 - 1]
            .max_abs()
            .max(self.coef[n / 2].max_abs())
            .max(self.coef[n / 2 + 1].max_abs());
        top / scale
    }
}

fn pow_i(base: C64, mut e: u32) -> C64 {
    let mut acc = ONE;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// A matrix-valued function sampled at the contour nodes (both circles).
#[derive(Debug, Clone)]
pub struct ContourFunction {
    pub spec: Arc<ContourSpec>,
    pub samples: Vec<Mat3>,
}

impl ContourFunction {
    pub fn new(spec: Arc<ContourSpec>, samples: Vec<Mat3>) -> ContourFunction {
        assert_eq!(samples.len(), spec.total_nodes());
        ContourFunction { spec, samples }
    }

    pub fn identity(spec: Arc<ContourSpec>) -> ContourFunction {
        let n = spec.total_nodes();
        ContourFunction { spec, samples: vec![Mat3::identity(); n] }
    }

    pub fn circle_samples(&self, id: CircleId) -> &[Mat3] {
        let n = self.spec.nodes_per_circle;
        match id {
            CircleId::Gamma0 => &self.samples[..n],
            CircleId::Gamma1 => &self.samples[n..],
        }
    }

    /// Pointwise right multiplication, (g w)(z) = g(z) w(z).
    pub fn mul_pointwise(&self, w: &ContourFunction) -> ContourFunction {
        let samples = self
            .samples
            .iter()
            .zip(w.samples.iter())
            .map(|(a, b)| a.mul(b))
            .collect();
        ContourFunction { spec: Arc::clone(&self.spec), samples }
    }

    pub fn sub(&self, o: &ContourFunction) -> ContourFunction {
        let samples = self.samples.iter().zip(o.samples.iter()).map(|(a, b)| a.sub(b)).collect();
        ContourFunction { spec: Arc::clone(&self.spec), samples }
    }

    pub fn add(&self, o: &ContourFunction) -> ContourFunction {
        let samples = self.samples.iter().zip(o.samples.iter()).map(|(a, b)| a.add(b)).collect();
        ContourFunction { spec: Arc::clone(&self.spec), samples }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(Mat3::max_abs).fold(0.0, f64::max)
    }

    /// Largest spectral norm over the nodes.
    pub fn sup_norm2(&self) -> f64 {
        self.samples.iter().map(Mat3::norm2).fold(0.0, f64::max)
    }

    pub fn modes(&self) -> [CircleModes; 2] {
        [
            circle_modes(&self.spec.gamma0, self.circle_samples(CircleId::Gamma0)),
            circle_modes(&self.spec.gamma1, self.circle_samples(CircleId::Gamma1)),
        ]
    }

    /// Worst-circle resolution defect of the mode expansion.
    pub fn resolution_defect(&self) -> f64 {
        let [m0, m1] = self.modes();
        m0.resolution_defect().max(m1.resolution_defect())
    }
}

/// Guard band around the circles for off-contour evaluation, relative to the
/// radius. Mode sums converge arbitrarily close to the circle; the guard only
/// rejects points where interior/exterior is numerically ambiguous.
const PROXIMITY_GUARD: f64 = 1e-8;

fn check_proximity(spec: &ContourSpec, z: C64) -> Result<()> {
    for c in [&spec.gamma0, &spec.gamma1] {
        if (c.zeta(z).norm() - 1.0).abs() < PROXIMITY_GUARD {
            return Err(Error::Proximity { z });
        }
    }
    Ok(())
}

/// Cauchy integral of g over the full contour, evaluated off the contour.
pub fn cauchy_off(g: &ContourFunction, z: C64) -> Result<Mat3> {
    check_proximity(&g.spec, z)?;
    let [m0, m1] = g.modes();
    Ok(m0.cauchy_at(z).add(&m1.cauchy_at(z)))
}

/// Same, reusing precomputed modes.
pub fn cauchy_off_modes(spec: &ContourSpec, modes: &[CircleModes; 2], z: C64) -> Result<Mat3> {
    check_proximity(spec, z)?;
    Ok(modes[0].cauchy_at(z).add(&modes[1].cauchy_at(z)))
}

/// Boundary values from the minus side (the interior for clockwise loops):
/// own-circle mode projection plus the smooth cross-circle field.
pub fn cauchy_minus(g: &ContourFunction) -> ContourFunction {
    let n = g.spec.nodes_per_circle;
    let [m0, m1] = g.modes();
    let mut samples = Vec::with_capacity(2 * n);
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let z = g.spec.nodes(CircleId::Gamma0)[j];
        samples.push(m0.minus_boundary_at(theta).add(&m1.cauchy_at(z)));
    }
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let z = g.spec.nodes(CircleId::Gamma1)[j];
        samples.push(m1.minus_boundary_at(theta).add(&m0.cauchy_at(z)));
    }
    ContourFunction { spec: Arc::clone(&g.spec), samples }
}

/// Plus-side boundary values; the jump relation C_+ g - C_- g = g holds
/// exactly by construction.
pub fn cauchy_plus(g: &ContourFunction) -> ContourFunction {
    cauchy_minus(g).add(g)
}

/// C_w g = C_-(g w).
pub fn apply_cw(w: &ContourFunction, g: &ContourFunction) -> ContourFunction {
    cauchy_minus(&g.mul_pointwise(w))
}

/// Drop the negative Laurent modes on each circle; minus boundary values of
/// functions analytic inside the loops satisfy this projection exactly.
pub fn project_analytic(g: &ContourFunction) -> ContourFunction {
    let n = g.spec.nodes_per_circle;
    let [mut m0, mut m1] = g.modes();
    for modes in [&mut m0, &mut m1] {
        for j in n / 2..n {
            modes.coef[j] = Mat3::zero();
        }
    }
    let mut samples = m0.samples();
    samples.extend(m1.samples());
    ContourFunction { spec: Arc::clone(&g.spec), samples }
}

/// Cross-circle block of the discrete C_-: values at the target nodes of the
/// Cauchy field generated by the source-circle density (target nodes lie
/// outside the source circle, so only its exterior modes contribute):
/// entries sum_{m=1}^{n/2} (e^{i theta_l}/zeta_i)^m / n, row major n x n.
pub fn cross_block(spec: &ContourSpec, target: CircleId, source: CircleId) -> Vec<C64> {
    let n = spec.nodes_per_circle;
    let src = spec.circle(source);
    let mut x = vec![ZERO; n * n];
    for (i, &zi) in spec.nodes(target).iter().enumerate() {
        let zeta = src.zeta(zi);
        for l in 0..n {
            let q = C64::from_polar(1.0, 2.0 * PI * l as f64 / n as f64) / zeta;
            x[i * n + l] = q * (ONE - pow_i(q, (n / 2) as u32)) / (ONE - q) / n as f64;
        }
    }
    x
}

/// Dense scalar matrix of C_- on node values (2N x 2N, row major), plus a
/// power-iteration estimate of its spectral norm. The same-circle blocks are
/// the mode projections, the cross blocks closed-form exterior mode sums.
pub struct CauchyMatrix {
    pub size: usize,
    pub entries: Vec<C64>,
    pub norm2_est: f64,
}

pub fn cauchy_matrix(spec: &ContourSpec) -> CauchyMatrix {
    let n = spec.nodes_per_circle;
    let size = 2 * n;
    let mut s = vec![ZERO; size * size];

    // same-circle block: -(P_{>=0})[j, l] with P entries from the geometric sum
    // sum_{m=0}^{n/2-1} e^{i m (theta_j - theta_l)} / n
    let mut proj = vec![ZERO; n * n];
    for j in 0..n {
        for l in 0..n {
            let d = (j + n - l) % n;
            let v = if d == 0 {
                C64::new(0.5, 0.0)
            } else {
                let w = C64::from_polar(1.0, 2.0 * PI * d as f64 / n as f64);
                let num = pow_i(w, (n / 2) as u32) - ONE;
                num / (w - ONE) / n as f64
            };
            proj[j * n + l] = -v;
        }
    }
    for j in 0..n {
        for l in 0..n {
            s[j * size + l] = proj[j * n + l];
            s[(n + j) * size + (n + l)] = proj[j * n + l];
        }
    }
    for (target, source, row_off, col_off) in [
        (CircleId::Gamma0, CircleId::Gamma1, 0usize, n),
        (CircleId::Gamma1, CircleId::Gamma0, n, 0usize),
    ] {
        let x = cross_block(spec, target, source);
        for i in 0..n {
            for l in 0..n {
                s[(row_off + i) * size + col_off + l] = x[i * n + l];
            }
        }
    }

    // spectral norm estimate by power iteration on S^H S
    let mut rng = Rng64::new(0x5eed);
    let mut v: Vec<C64> = (0..size).map(|_| rng.next_c64()).collect();
    let mut norm2_est = 0.0f64;
    let mut tmp = vec![ZERO; size];
    for _ in 0..30 {
        for i in 0..size {
            let mut acc = ZERO;
            for j in 0..size {
                acc += s[i * size + j] * v[j];
            }
            tmp[i] = acc;
        }
        for j in 0..size {
            let mut acc = ZERO;
            for i in 0..size {
                acc += s[i * size + j].conj() * tmp[i];
            }
            v[j] = acc;
        }
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            break;
        }
        norm2_est = nv;
        for x in v.iter_mut() {
            *x /= nv;
        }
    }
    CauchyMatrix { size, entries: s, norm2_est: norm2_est.sqrt() }
}

/// Spectral-norm estimate of the discrete C_- by power iteration on S^H S,
/// with S applied through the mode projection (FFT) plus the cached cross
/// blocks; nothing of the same-circle blocks is materialized.
pub fn minus_norm_estimate(spec: &ContourSpec) -> f64 {
    let n = spec.nodes_per_circle;
    let x01 = cross_block(spec, CircleId::Gamma0, CircleId::Gamma1);
    let x10 = cross_block(spec, CircleId::Gamma1, CircleId::Gamma0);

    // -P_{>=0} per circle in mode space; Hermitian, so shared by S and S^H
    let proj = |seg: &mut [C64]| {
        fft(seg, false);
        for v in seg.iter_mut().skip(n / 2) {
            *v = ZERO;
        }
        fft(seg, true);
        for v in seg.iter_mut() {
            *v = -*v;
        }
    };
    let matvec = |x: &[C64], out: &mut [C64], adjoint: bool| {
        let (a, b) = x.split_at(n);
        let mut pa = a.to_vec();
        let mut pb = b.to_vec();
        proj(&mut pa);
        proj(&mut pb);
        for i in 0..n {
            let mut acc0 = pa[i];
            let mut acc1 = pb[i];
            if !adjoint {
                for l in 0..n {
                    acc0 += x01[i * n + l] * b[l];
                    acc1 += x10[i * n + l] * a[l];
                }
            } else {
                for l in 0..n {
                    acc0 += x10[l * n + i].conj() * b[l];
                    acc1 += x01[l * n + i].conj() * a[l];
                }
            }
            out[i] = acc0;
            out[n + i] = acc1;
        }
    };

    let mut rng = Rng64::new(0x5eed);
    let mut v: Vec<C64> = (0..2 * n).map(|_| rng.next_c64()).collect();
    let mut tmp = vec![ZERO; 2 * n];
    let mut est = 0.0f64;
    for _ in 0..25 {
        matvec(&v, &mut tmp, false);
        matvec(&tmp, &mut v, true);
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        est = nv;
        for x in v.iter_mut() {
            *x /= nv;
        }
    }
    est.sqrt()
}
