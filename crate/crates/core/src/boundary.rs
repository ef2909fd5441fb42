//! Characteristic boundary data and the derived Lax coefficients.
//!
//! Data with the corner behaviour H ~ s^{1-alpha} have derivatives blowing up
//! like s^{-alpha}; everything is therefore evaluated in the regularized
//! parameter u = s^{1-alpha}, in which admissible data are C^1. The Volterra
//! integration, interpolation of sampled data and the corner limits all work
//! in u.

use crate::error::{Error, Result};
use crate::linalg::{C64, Mat3, I, ONE, ZERO};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Boundary data and first derivatives at one parameter value, in u-units.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryValues {
    pub e: C64,
    pub h: C64,
    pub f: f64,
    pub e_du: C64,
    pub h_du: C64,
}

/// Floater-Hormann rational barycentric interpolant (stable on arbitrary,
/// in particular equispaced, nodes).
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: Vec<f64>, blend_degree: usize) -> Result<Barycentric> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::Format("need at least two samples".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Format("sample nodes must be strictly increasing".into()));
            }
        }
        let d = blend_degree.min(n - 1);
        let mut weights = vec![0.0f64; n];
        for (j, w) in weights.iter_mut().enumerate() {
            let lo = j.saturating_sub(d);
            let hi = j.min(n - 1 - d);
            let mut acc = 0.0;
            for i in lo..=hi {
                let mut prod = 1.0;
                for k in i..=(i + d) {
                    if k != j {
                        prod /= nodes[j] - nodes[k];
                    }
                }
                acc += if i % 2 == 0 { prod } else { -prod };
            }
            *w = acc;
        }
        Ok(Barycentric { nodes, weights })
    }

    fn node_index(&self, u: f64) -> Option<usize> {
        let scale = self.nodes.last().unwrap().abs().max(1.0);
        self.nodes.iter().position(|&x| (u - x).abs() <= 1e-14 * scale)
    }

    pub fn eval(&self, values: &[C64], u: f64) -> C64 {
        if let Some(i) = self.node_index(u) {
            return values[i];
        }
        let mut num = ZERO;
        let mut den = 0.0 * ONE;
        for j in 0..self.nodes.len() {
            let t = C64::new(self.weights[j] / (u - self.nodes[j]), 0.0);
            num += t * values[j];
            den += t;
        }
        num / den
    }

    pub fn eval_deriv(&self, values: &[C64], u: f64) -> C64 {
        if let Some(i) = self.node_index(u) {
            // Schneider-Werner differentiation at a node
            let mut s = ZERO;
            for j in 0..self.nodes.len() {
                if j != i {
                    s -= C64::new(self.weights[j] / self.weights[i] / (self.nodes[i] - self.nodes[j]), 0.0)
                        * (values[i] - values[j]);
                }
            }
            return s;
        }
        let mut num = ZERO;
        let mut den = ZERO;
        let mut dnum = ZERO;
        let mut dden = ZERO;
        for j in 0..self.nodes.len() {
            let du = u - self.nodes[j];
            let t = C64::new(self.weights[j] / du, 0.0);
            num += t * values[j];
            den += t;
            let t2 = C64::new(self.weights[j] / (du * du), 0.0);
            dnum -= t2 * values[j];
            dden -= t2;
        }
        let r = num / den;
        (dnum - r * dden) / den
    }
}

/// Sampled boundary data, reparametrized and interpolated in u.
#[derive(Debug, Clone)]
pub struct SampledProfile {
    pub interp: Barycentric,
    pub e_values: Vec<C64>,
    pub h_values: Vec<C64>,
}

#[derive(Debug, Clone)]
pub enum ProfileSource {
    /// E = 1, H = 0.
    Constant,
    /// E = 1, H = coeff * sqrt(s); alpha = 1/2. The exact solution family
    /// restricts to this with coeff = p -+ i q.
    Shock { coeff: C64 },
    Sampled(SampledProfile),
    /// Data frozen beyond s_cut (domain-of-dependence experiments).
    Truncated { base: Box<ProfileSource>, s_cut: f64 },
}

#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub axis: Axis,
    pub alpha: f64,
    pub s_max: f64,
    source: ProfileSource,
}

impl BoundaryProfile {
    pub fn constant(axis: Axis) -> BoundaryProfile {
        BoundaryProfile { axis, alpha: 0.0, s_max: 1.0, source: ProfileSource::Constant }
    }

    pub fn shock(axis: Axis, coeff: C64) -> BoundaryProfile {
        let c2 = coeff.norm_sqr();
        let s_max = if c2 > 0.0 { (1.0 / c2).min(1.0) } else { 1.0 };
        BoundaryProfile { axis, alpha: 0.5, s_max, source: ProfileSource::Shock { coeff } }
    }

    pub fn from_samples(
        axis: Axis,
        alpha: f64,
        s: Vec<f64>,
        e: Vec<C64>,
        h: Vec<C64>,
    ) -> Result<BoundaryProfile> {
        if s.len() != e.len() || s.len() != h.len() {
            return Err(Error::Format("sample column lengths differ".into()));
        }
        if s.first() != Some(&0.0) {
            return Err(Error::Format("samples must start at s = 0".into()));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Format(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        let u: Vec<f64> = s.iter().map(|&v| v.powf(1.0 - alpha)).collect();
        let s_max = *s.last().unwrap();
        let interp = Barycentric::new(u, 3)?;
        let profile = BoundaryProfile {
            axis,
            alpha,
            s_max,
            source: ProfileSource::Sampled(SampledProfile { interp, e_values: e, h_values: h }),
        };
        profile.validate(1e-6)?;
        Ok(profile)
    }

    /// Freeze the data beyond s_cut; the continuation is constant.
    pub fn truncate(self, s_cut: f64) -> BoundaryProfile {
        BoundaryProfile {
            axis: self.axis,
            alpha: self.alpha,
            s_max: self.s_max,
            source: ProfileSource::Truncated { base: Box::new(self.source), s_cut },
        }
    }

    pub fn u_of_s(&self, s: f64) -> f64 {
        s.powf(1.0 - self.alpha)
    }

    pub fn s_of_u(&self, u: f64) -> f64 {
        u.powf(1.0 / (1.0 - self.alpha))
    }

    pub fn values_at_u(&self, u: f64) -> BoundaryValues {
        source_values(&self.source, self.alpha, u)
    }

    pub fn e(&self, s: f64) -> C64 {
        self.values_at_u(self.u_of_s(s)).e
    }

    pub fn h(&self, s: f64) -> C64 {
        self.values_at_u(self.u_of_s(s)).h
    }

    pub fn f(&self, s: f64) -> f64 {
        self.values_at_u(self.u_of_s(s)).f
    }

    /// lim s^alpha dE/ds = (1 - alpha) dE/du at u = 0.
    pub fn m_limit(&self) -> C64 {
        self.values_at_u(0.0).e_du * (1.0 - self.alpha)
    }

    /// lim s^alpha dH/ds.
    pub fn n_limit(&self) -> C64 {
        self.values_at_u(0.0).h_du * (1.0 - self.alpha)
    }

    /// Corner conditions, positivity and boundedness; all violations listed.
    pub fn validate(&self, corner_tol: f64) -> Result<()> {
        let mut problems = Vec::new();
        let v0 = self.values_at_u(0.0);
        if (v0.e - ONE).norm() > corner_tol {
            problems.push(format!("E(0) = {} differs from 1", v0.e));
        }
        if v0.h.norm() > corner_tol {
            problems.push(format!("H(0) = {} differs from 0", v0.h));
        }
        let m = 512;
        for i in 0..=m {
            let s = self.s_max * (1.0 - 1e-9) * i as f64 / m as f64;
            let v = self.values_at_u(self.u_of_s(s));
            if !(v.f > 0.0) {
                problems.push(format!("Re E - |H|^2 = {} not positive at s = {s}", v.f));
                break;
            }
        }
        for u in [0.0, 1e-8, 1e-4] {
            let v = self.values_at_u(u);
            if !v.e_du.is_finite() || !v.h_du.is_finite() {
                problems.push(format!("s^alpha-weighted derivative unbounded near s = 0 (u = {u})"));
                break;
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

fn source_values(source: &ProfileSource, alpha: f64, u: f64) -> BoundaryValues {
    match source {
        ProfileSource::Constant => BoundaryValues { e: ONE, h: ZERO, f: 1.0, e_du: ZERO, h_du: ZERO },
        ProfileSource::Shock { coeff } => {
            let h = coeff * u;
            BoundaryValues { e: ONE, h, f: 1.0 - h.norm_sqr(), e_du: ZERO, h_du: *coeff }
        }
        ProfileSource::Sampled(sp) => {
            let e = sp.interp.eval(&sp.e_values, u);
            let h = sp.interp.eval(&sp.h_values, u);
            BoundaryValues {
                e,
                h,
                f: e.re - h.norm_sqr(),
                e_du: sp.interp.eval_deriv(&sp.e_values, u),
                h_du: sp.interp.eval_deriv(&sp.h_values, u),
            }
        }
        ProfileSource::Truncated { base, s_cut } => {
            let u_cut = s_cut.powf(1.0 - alpha);
            if u <= u_cut {
                source_values(base, alpha, u)
            } else {
                let mut v = source_values(base, alpha, u_cut);
                v.e_du = ZERO;
                v.h_du = ZERO;
                v
            }
        }
    }
}

/// Derived coefficient functions A (x-axis) or B (y-axis), f and sqrt(f).
pub struct DerivedCoefficients<'a> {
    profile: &'a BoundaryProfile,
}

/// Checks positivity of f on the evaluation range before exposing A, f.
pub fn derive(profile: &BoundaryProfile) -> Result<DerivedCoefficients<'_>> {
    let m = 512;
    for i in 0..=m {
        let s = profile.s_max * (1.0 - 1e-9) * i as f64 / m as f64;
        let f = profile.f(s);
        if !(f > 0.0) {
            return Err(Error::Positivity(format!(
                "f(s) = {f} at s = {s} on the {} axis",
                profile.axis.name()
            )));
        }
    }
    Ok(DerivedCoefficients { profile })
}

impl DerivedCoefficients<'_> {
    /// A(s) = (dE/ds - 2 conj(H) dH/ds) / (2 f); singular like s^{-alpha}.
    pub fn coeff(&self, s: f64) -> C64 {
        let alpha = self.profile.alpha;
        let v = self.profile.values_at_u(self.profile.u_of_s(s));
        let ds_scale = (1.0 - alpha) * s.powf(-alpha);
        (v.e_du - 2.0 * v.h.conj() * v.h_du) * ds_scale / (2.0 * v.f)
    }

    pub fn f(&self, s: f64) -> f64 {
        self.profile.f(s)
    }

    pub fn sqrt_f(&self, s: f64) -> f64 {
        self.profile.f(s).sqrt()
    }
}

/// Regularized coefficients of the axis Lax matrix, per unit of u.
#[derive(Debug, Clone, Copy)]
pub struct AxisCoefficients {
    /// A ds/du = (dE/du - 2 conj(H) dH/du) / (2 f)
    pub au: C64,
    /// (dH/du) / sqrt(f)
    pub hu: C64,
}

pub fn axis_coefficients(v: &BoundaryValues) -> AxisCoefficients {
    let au = (v.e_du - 2.0 * v.h.conj() * v.h_du) / (2.0 * v.f);
    let hu = v.h_du / v.f.sqrt();
    AxisCoefficients { au, hu }
}

/// The axis Lax matrix in u-units. `lam` is lambda on the x-axis and
/// 1/lambda on the y-axis; the matrix structure is identical.
pub fn lax_matrix(co: &AxisCoefficients, lam: C64) -> Mat3 {
    let au = co.au;
    let hu = co.hu;
    Mat3::from_rows(
        [au.conj(), lam * au.conj(), I * hu],
        [lam * au, au, -I * lam * hu],
        [I * hu.conj(), I * lam * hu.conj(), C64::new(au.re, 0.0)],
    )
}

/// The coefficient matrix of the boundary Lax equation at parameter s, in
/// s-units (entries blow up like s^{-alpha} at the corner).
pub fn coefficient_matrix(profile: &BoundaryProfile, s: f64, lam: C64) -> Mat3 {
    let v = profile.values_at_u(profile.u_of_s(s));
    let ds_scale = (1.0 - profile.alpha) * s.powf(-profile.alpha);
    let co = AxisCoefficients {
        au: (v.e_du - 2.0 * v.h.conj() * v.h_du) * ds_scale / (2.0 * v.f),
        hu: v.h_du * ds_scale / v.f.sqrt(),
    };
    lax_matrix(&co, lam)
}

fn parse_complex_row(line: &str, lineno: usize) -> Result<(f64, C64, C64)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(Error::Format(format!("line {lineno}: expected 5 fields, got {}", fields.len())));
    }
    let mut vals = [0.0f64; 5];
    for (i, f) in fields.iter().enumerate() {
        vals[i] = f
            .parse::<f64>()
            .map_err(|_| Error::Format(format!("line {lineno}: cannot parse '{f}'")))?;
    }
    Ok((vals[0], C64::new(vals[1], vals[2]), C64::new(vals[3], vals[4])))
}

#[derive(serde::Deserialize)]
struct SidecarMeta {
    alpha: f64,
    axis: String,
}

/// Load one characteristic from a CSV sample file plus its JSON descriptor.
///
/// CSV header: `s,reE,imE,reH,imH`, strictly increasing s starting at 0.
/// Descriptor: `{ "alpha": <real>, "axis": "x"|"y" }`.
pub fn load_sampled(csv_path: &Path, meta_path: &Path) -> Result<BoundaryProfile> {
    let meta_text = std::fs::read_to_string(meta_path)?;
    let meta: SidecarMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format(format!("descriptor {}: {e}", meta_path.display())))?;
    let axis = match meta.axis.as_str() {
        "x" => Axis::X,
        "y" => Axis::Y,
        other => return Err(Error::Format(format!("axis must be \"x\" or \"y\", got \"{other}\""))),
    };

    let text = std::fs::read_to_string(csv_path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty sample file".into()))?;
    let normalized: String = header.split(',').map(str::trim).collect::<Vec<_>>().join(",");
    if normalized != "s,reE,imE,reH,imH" {
        return Err(Error::Format(format!("bad header '{header}'")));
    }
    let mut s = Vec::new();
    let mut e = Vec::new();
    let mut h = Vec::new();
    for (idx, line) in lines {
        let (sv, ev, hv) = parse_complex_row(line, idx + 1)?;
        s.push(sv);
        e.push(ev);
        h.push(hv);
    }
    BoundaryProfile::from_samples(axis, meta.alpha, s, e, h)
}
