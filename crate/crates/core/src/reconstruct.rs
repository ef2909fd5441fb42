//! Recovery of the potentials from the Riemann-Hilbert value at z = 0, and
//! the algebraic forward map used for roundtrip testing.

use crate::error::{Error, Result};
use crate::linalg::{lambda_signature, C64, Mat3, I, ONE, ZERO};

/// Reconstructed potentials at one grid point.
#[derive(Debug, Clone, Copy)]
pub struct PotentialSample {
    pub x: f64,
    pub y: f64,
    pub e: C64,
    pub h: C64,
    pub f: f64,
    pub chi: f64,
}

/// The frame factor built from potential values,
/// (1/2) [[conj(E) - 2 H conj(H), 1, iH], [E, -1, -iH],
/// [2 i conj(H) sqrt(f), 0, sqrt(f)]] * [[1,1,0],[1,-1,0],[0,0,2]].
pub fn tilde_frame(e: C64, h: C64) -> Result<Mat3> {
    let f = e.re - h.norm_sqr();
    if !(f > 0.0) {
        return Err(Error::Positivity(format!("Re E - |H|^2 = {f} for E = {e}, H = {h}")));
    }
    let sf = C64::new(f.sqrt(), 0.0);
    let left = Mat3::from_rows(
        [e.conj() - 2.0 * h * h.conj(), ONE, I * h],
        [e, -ONE, -I * h],
        [2.0 * I * h.conj() * sf, ZERO, sf],
    );
    let right = Mat3::from_rows([ONE, ONE, ZERO], [ONE, -ONE, ZERO], [ZERO, ZERO, 2.0 * ONE]);
    Ok(left.mul(&right).scale(C64::new(0.5, 0.0)))
}

/// Forward map (E, H) -> m(0) = T^{-1} Lambda T Lambda with T the tilde frame.
pub fn forward(e: C64, h: C64) -> Result<Mat3> {
    let t = tilde_frame(e, h)?;
    let sig = lambda_signature();
    Ok(t.inverse()?.mul(&sig).mul(&t).mul(&sig))
}

/// Relative threshold below which the primary recovery denominator is
/// considered vanishing and the alternate branch is used.
const BRANCH_SWITCH: f64 = 1e-6;

/// Recover (E, H, f, chi) from the RH value at z = 0.
pub fn recover(m_hat: &Mat3, x: f64, y: f64) -> Result<PotentialSample> {
    let m11 = m_hat.at(0, 0);
    let m21 = m_hat.at(1, 0);
    let m22 = m_hat.at(1, 1);
    let m23 = m_hat.at(1, 2);
    let m33 = m_hat.at(2, 2);
    let scale = m_hat.max_abs().max(1.0);

    let den_primary = m33 + m11 + m21;
    let (e, h) = if den_primary.norm() >= BRANCH_SWITCH * scale {
        (
            (m33 + m11 - m21) / den_primary,
            -I * m23 / den_primary,
        )
    } else {
        // alternate branch; the two singular sets are disjoint
        let den_e = ONE - m11 - m21;
        let den_h = (m11 + m21 - ONE) * m23;
        if den_e.norm() < BRANCH_SWITCH * scale || den_h.norm() < BRANCH_SWITCH * scale * scale {
            return Err(Error::DegenerateRecovery);
        }
        let e_bar = -(ONE - m11 + m21) / den_e;
        let h_bar = I * m21 * (m33 - ONE) / den_h;
        (e_bar.conj(), h_bar.conj())
    };

    // f from the entries; agrees with Re E - |H|^2 for exact data
    let den_f = ONE + m22 + m21;
    let f = 2.0 * (m22 + ONE).re / den_f.norm_sqr();
    if !(f > 0.0) {
        return Err(Error::Positivity(format!("recovered f = {f} at ({x}, {y})")));
    }
    Ok(PotentialSample { x, y, e, h, f, chi: (1.0 - x - y) / f })
}

/// Defects of the algebraic identities the value at z = 0 must satisfy:
/// unit determinant, the four entry identities, hermiticity and m22 >= 1.
#[derive(Debug, Clone, Copy)]
pub struct InvariantDefects {
    pub det: f64,
    pub identities: f64,
    pub hermiticity: f64,
    pub m22_short: f64,
}

impl InvariantDefects {
    pub fn max(&self) -> f64 {
        self.det.max(self.identities).max(self.hermiticity).max(self.m22_short)
    }
}

pub fn invariant_defects(m_hat: &Mat3) -> InvariantDefects {
    let m11 = m_hat.at(0, 0);
    let m12 = m_hat.at(0, 1);
    let m13 = m_hat.at(0, 2);
    let m21 = m_hat.at(1, 0);
    let m22 = m_hat.at(1, 1);
    let m23 = m_hat.at(1, 2);
    let m31 = m_hat.at(2, 0);
    let m32 = m_hat.at(2, 1);
    let m33 = m_hat.at(2, 2);
    let det = (m_hat.det() - ONE).norm();
    let id1 = (m33 - (ONE - m11 + m22)).norm();
    let id2 = (m12 * m21 - (m11 - ONE) * (m22 + ONE)).norm();
    let id3 = (m13 * m31 - (m11 - ONE) * (m22 - m11)).norm();
    let id4 = (m23 * m32 - (m22 + ONE) * (m22 - m11)).norm();
    let hermiticity = m_hat.conj().sub(&m_hat.transpose()).max_abs();
    let m22_short = (1.0 - m22.re).max(0.0);
    InvariantDefects {
        det,
        identities: id1.max(id2).max(id3).max(id4),
        hermiticity,
        m22_short,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng64;

    fn random_potentials(rng: &mut Rng64) -> (C64, C64) {
        loop {
            let e = C64::new(rng.range(0.2, 2.5), rng.range(-1.0, 1.0));
            let h = C64::new(rng.range(-0.8, 0.8), rng.range(-0.8, 0.8));
            if e.re - h.norm_sqr() > 0.05 {
                return (e, h);
            }
        }
    }

    #[test]
    fn identity_maps_to_trivial_potentials() {
        let m = forward(ONE, ZERO).unwrap();
        assert!(m.sub(&Mat3::identity()).max_abs() < 1e-15);
        let p = recover(&Mat3::identity(), 0.2, 0.3).unwrap();
        assert!((p.e - ONE).norm() < 1e-15 && p.h.norm() < 1e-15);
        assert!((p.f - 1.0).abs() < 1e-15);
        assert!((p.chi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forward_entry_formulas() {
        // E = 1 + i, H = 0.5: f = 0.75
        let e = C64::new(1.0, 1.0);
        let h = C64::new(0.5, 0.0);
        let m = forward(e, h).unwrap();
        let f = 0.75;
        let expect_11 = C64::new((1.0 + e.norm_sqr() - 2.0 * h.norm_sqr()) / (2.0 * f), 0.0);
        let expect_21 = (ONE - e) * (ONE + e.conj()) / (2.0 * f);
        let expect_33 = C64::new((e.re + h.norm_sqr()) / f, 0.0);
        let expect_23 = I * (ONE + e.conj()) * h / f;
        assert!((m.at(0, 0) - expect_11).norm() < 1e-13);
        assert!((m.at(1, 0) - expect_21).norm() < 1e-13);
        assert!((m.at(2, 2) - expect_33).norm() < 1e-13);
        assert!((m.at(1, 2) - expect_23).norm() < 1e-13);
        assert!((m.at(2, 2) - C64::new(5.0 / 3.0, 0.0)).norm() < 1e-13);
        assert!((m.at(1, 2) - (2.0 * I + ONE) / 1.5).norm() < 1e-13);
    }

    #[test]
    fn forward_satisfies_inverse_symmetry() {
        let sig = lambda_signature();
        let mut rng = Rng64::new(17);
        for _ in 0..200 {
            let (e, h) = random_potentials(&mut rng);
            let m = forward(e, h).unwrap();
            let scale = m.max_abs().max(1.0);
            // m^{-1} = Lambda m Lambda
            let d = m.inverse().unwrap().sub(&sig.mul(&m).mul(&sig)).max_abs();
            assert!(d < 1e-12 * scale * scale, "inverse symmetry defect {d}");
            let defs = invariant_defects(&m);
            assert!(defs.max() < 1e-12 * scale * scale, "invariant defects {defs:?}");
            // diagonal entries at least 1
            assert!(m.at(0, 0).re >= 1.0 - 1e-12);
            assert!(m.at(1, 1).re >= 1.0 - 1e-12);
            assert!(m.at(2, 2).re >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn recover_forward_roundtrip() {
        let mut rng = Rng64::new(29);
        for _ in 0..1000 {
            let (e, h) = random_potentials(&mut rng);
            let m = forward(e, h).unwrap();
            let p = recover(&m, 0.1, 0.2).unwrap();
            assert!((p.e - e).norm() < 1e-12, "E {e} -> {}", p.e);
            assert!((p.h - h).norm() < 1e-12, "H {h} -> {}", p.h);
            let f = e.re - h.norm_sqr();
            assert!((p.f - f).abs() < 1e-12 * f.max(1.0));
        }
    }

    #[test]
    fn positivity_rejected() {
        assert!(matches!(forward(C64::new(0.2, 0.0), ONE), Err(Error::Positivity(_))));
    }
}
