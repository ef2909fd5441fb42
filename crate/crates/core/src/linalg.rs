//! Small complex linear algebra: 3x3 matrices, a dense pivoted LU for the
//! collocation systems, and a deterministic PRNG for estimators and tests.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense 3x3 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[C64; 3]; 3]);

impl Mat3 {
    pub fn zero() -> Self {
        Mat3([[ZERO; 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_rows(r0: [C64; 3], r1: [C64; 3], r2: [C64; 3]) -> Self {
        Mat3([r0, r1, r2])
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[i][j] = v;
    }

    pub fn add(&self, o: &Mat3) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, o: &Mat3) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, c: C64) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] *= c;
            }
        }
        m
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = ZERO;
                for k in 0..3 {
                    s += self.0[i][k] * o.0[k][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn conj(&self) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Mat3 {
        self.transpose().conj()
    }

    pub fn det(&self) -> C64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Inverse via the adjugate; errors when the determinant is negligible
    /// relative to the matrix scale.
    pub fn inverse(&self) -> Result<Mat3> {
        let d = self.det();
        let scale = self.max_abs().powi(3).max(f64::MIN_POSITIVE);
        if d.norm() < 1e-14 * scale {
            return Err(Error::SingularSystem { x: f64::NAN, y: f64::NAN });
        }
        let a = &self.0;
        let mut c = Mat3::zero();
        c.0[0][0] = a[1][1] * a[2][2] - a[1][2] * a[2][1];
        c.0[0][1] = a[0][2] * a[2][1] - a[0][1] * a[2][2];
        c.0[0][2] = a[0][1] * a[1][2] - a[0][2] * a[1][1];
        c.0[1][0] = a[1][2] * a[2][0] - a[1][0] * a[2][2];
        c.0[1][1] = a[0][0] * a[2][2] - a[0][2] * a[2][0];
        c.0[1][2] = a[0][2] * a[1][0] - a[0][0] * a[1][2];
        c.0[2][0] = a[1][0] * a[2][1] - a[1][1] * a[2][0];
        c.0[2][1] = a[0][1] * a[2][0] - a[0][0] * a[2][1];
        c.0[2][2] = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        Ok(c.scale(ONE / d))
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max(self.0[i][j].norm());
            }
        }
        m
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Spectral norm via power iteration on A^H A (deterministic start).
    pub fn norm2(&self) -> f64 {
        let ah = self.adjoint();
        let mut v = [C64::new(1.0, 0.3), C64::new(-0.7, 0.2), C64::new(0.4, -1.1)];
        let mut lam = 0.0;
        for _ in 0..40 {
            // w = A^H (A v)
            let mut av = [ZERO; 3];
            for i in 0..3 {
                for j in 0..3 {
                    av[i] += self.0[i][j] * v[j];
                }
            }
            let mut w = [ZERO; 3];
            for i in 0..3 {
                for j in 0..3 {
                    w[i] += ah.0[i][j] * av[j];
                }
            }
            let n = (w[0].norm_sqr() + w[1].norm_sqr() + w[2].norm_sqr()).sqrt();
            if n == 0.0 {
                return 0.0;
            }
            lam = n;
            for i in 0..3 {
                v[i] = w[i] / n;
            }
        }
        lam.sqrt()
    }

    pub fn commutator(&self, o: &Mat3) -> Mat3 {
        self.mul(o).sub(&o.mul(self))
    }
}

/// diag(1, -1, 1); conjugation by it flips the sheet of the eigenfunctions.
pub fn lambda_signature() -> Mat3 {
    let mut m = Mat3::identity();
    m.0[1][1] = -ONE;
    m
}

/// Dense complex LU factorization with partial pivoting.
///
/// Real and imaginary parts are stored in separate row-major planes so the
/// trailing-submatrix updates vectorize, and the updates are blocked into
/// panels so they stay compute bound at collocation sizes (a few thousand).
pub struct DenseLu {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    piv: Vec<usize>,
    norm1: f64,
}

const LU_BLOCK: usize = 48;

impl DenseLu {
    /// Factor `a` (row major, n x n). Consumes the matrix storage.
    pub fn factor(n: usize, a: Vec<C64>, x: f64, y: f64) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut re = vec![0.0f64; n * n];
        let mut im = vec![0.0f64; n * n];
        for (i, v) in a.iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        drop(a);
        Self::factor_planes(n, re, im, x, y)
    }

    /// Factor from separate real/imaginary planes (row major, n x n).
    pub fn factor_planes(n: usize, mut re: Vec<f64>, mut im: Vec<f64>, x: f64, y: f64) -> Result<Self> {
        assert_eq!(re.len(), n * n);
        assert_eq!(im.len(), n * n);
        let norm1 = one_norm_planes(n, &re, &im);
        let mut piv = vec![0usize; n];

        let mut k0 = 0usize;
        while k0 < n {
            let kb = LU_BLOCK.min(n - k0);
            // panel factorization with partial pivoting, unblocked
            for k in k0..k0 + kb {
                let mut p = k;
                let mut best = re[k * n + k] * re[k * n + k] + im[k * n + k] * im[k * n + k];
                for i in (k + 1)..n {
                    let v = re[i * n + k] * re[i * n + k] + im[i * n + k] * im[i * n + k];
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                piv[k] = p;
                if p != k {
                    for j in 0..n {
                        re.swap(k * n + j, p * n + j);
                        im.swap(k * n + j, p * n + j);
                    }
                }
                let pr = re[k * n + k];
                let pi = im[k * n + k];
                let pn = pr * pr + pi * pi;
                if !(pn > 1e-300) || !pn.is_finite() {
                    return Err(Error::SingularSystem { x, y });
                }
                let inv_r = pr / pn;
                let inv_i = -pi / pn;
                let jhi = (k0 + kb).min(n);
                for i in (k + 1)..n {
                    let ar = re[i * n + k];
                    let ai = im[i * n + k];
                    let lr = ar * inv_r - ai * inv_i;
                    let li = ar * inv_i + ai * inv_r;
                    re[i * n + k] = lr;
                    im[i * n + k] = li;
                    if lr == 0.0 && li == 0.0 {
                        continue;
                    }
                    // update only the remaining panel columns here
                    for j in (k + 1)..jhi {
                        let br = re[k * n + j];
                        let bi = im[k * n + j];
                        re[i * n + j] -= lr * br - li * bi;
                        im[i * n + j] -= lr * bi + li * br;
                    }
                }
            }
            let ke = k0 + kb;
            if ke < n {
                // U12 block: solve L11 U12 = A12 (unit lower triangular)
                for k in k0..ke {
                    for i in (k + 1)..ke {
                        let lr = re[i * n + k];
                        let li = im[i * n + k];
                        if lr == 0.0 && li == 0.0 {
                            continue;
                        }
                        let (rk, ri) = split_rows(&mut re, n, k, i);
                        let (mk, mi) = split_rows(&mut im, n, k, i);
                        for j in ke..n {
                            let br = rk[j];
                            let bi = mk[j];
                            ri[j] -= lr * br - li * bi;
                            mi[j] -= lr * bi + li * br;
                        }
                    }
                }
                // trailing update A22 -= L21 U12, accumulated per row over
                // the panel columns
                for i in ke..n {
                    for k in k0..ke {
                        let lr = re[i * n + k];
                        let li = im[i * n + k];
                        if lr == 0.0 && li == 0.0 {
                            continue;
                        }
                        let (rk, ri) = split_rows(&mut re, n, k, i);
                        let (mk, mi) = split_rows(&mut im, n, k, i);
                        for j in ke..n {
                            let br = rk[j];
                            let bi = mk[j];
                            ri[j] -= lr * br - li * bi;
                            mi[j] -= lr * bi + li * br;
                        }
                    }
                }
            }
            k0 = ke;
        }
        Ok(DenseLu { n, re, im, piv, norm1 })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[i * self.n + j], self.im[i * self.n + j])
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
        // L y = Pb (unit lower)
        for i in 1..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s;
        }
        // U x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solve A^H x = b (used by the condition estimator).
    pub fn solve_adjoint_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        // A = P^T L U  =>  A^H = U^H L^H P, so solve U^H y = b, L^H z = y, x = P^T z.
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.at(j, i).conj() * b[j];
            }
            b[i] = s / self.at(i, i).conj();
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.at(j, i).conj() * b[j];
            }
            b[i] = s;
        }
        for k in (0..n).rev() {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    /// One-norm condition estimate (Hager-style power method on the inverse).
    pub fn cond1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0f64;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let y1: f64 = y.iter().map(|v| v.norm()).sum();
            if y1 <= est {
                break;
            }
            est = y1;
            let mut xi: Vec<C64> = y
                .iter()
                .map(|v| if v.norm() > 0.0 { v / v.norm() } else { ONE })
                .collect();
            self.solve_adjoint_in_place(&mut xi);
            let (jmax, zmax) = xi
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0usize, 0.0f64), |acc, it| if it.1 > acc.1 { it } else { acc });
            let zx: f64 = xi.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx.abs() {
                break;
            }
            x = vec![ZERO; n];
            x[jmax] = ONE;
        }
        self.norm1 * est
    }
}

/// Disjoint mutable views of rows k and i (k < i) of a row-major plane.
#[inline]
fn split_rows(plane: &mut [f64], n: usize, k: usize, i: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(k < i);
    let (head, tail) = plane.split_at_mut(i * n);
    (&head[k * n..k * n + n], &mut tail[..n])
}

fn one_norm_planes(n: usize, re: &[f64], im: &[f64]) -> f64 {
    let mut col = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            col[j] += C64::new(re[i * n + j], im[i * n + j]).norm();
        }
    }
    col.into_iter().fold(0.0, f64::max)
}

/// SplitMix64; deterministic sequences for estimators and tests.
#[derive(Debug, Clone)]
pub struct Rng64 {
    state: u64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_c64(&mut self) -> C64 {
        C64::new(self.next_f64() * 2.0 - 1.0, self.next_f64() * 2.0 - 1.0)
    }
}
