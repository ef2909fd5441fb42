//! Configuration-driven runs: sweep the solve grid, collect per-point
//! diagnostics, and emit the fields CSV and the JSON report.

use crate::boundary::{self, Axis, BoundaryProfile};
use crate::error::{Error, Result};
use crate::exact::{self, FamilyParams};
use crate::linalg::{C64, Rng64};
use crate::reconstruct::{self, InvariantDefects};
use crate::rh::{self, PointSolveOptions, RhOptions, RhSolution};
use crate::verify::{self, AdmissibilityReport, FieldPatch, FunctionalEstimate, LimitEstimate, PdeResiduals};
use crate::volterra::{self, VolterraOptions};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileDescriptor {
    /// Characteristic restriction of the exact solution family.
    Family { p: f64, q: f64 },
    Constant,
    /// E = 1, H = coeff sqrt(s).
    Shock { re: f64, im: f64 },
    /// CSV samples plus JSON sidecar descriptor.
    Sampled { data: PathBuf, meta: PathBuf },
    /// Base data frozen beyond s_cut.
    Truncated { base: Box<ProfileDescriptor>, s_cut: f64 },
}

impl ProfileDescriptor {
    pub fn build(&self, axis: Axis) -> Result<BoundaryProfile> {
        let profile = match self {
            ProfileDescriptor::Family { p, q } => exact::profile(&FamilyParams::new(*p, *q)?, axis),
            ProfileDescriptor::Constant => BoundaryProfile::constant(axis),
            ProfileDescriptor::Shock { re, im } => BoundaryProfile::shock(axis, C64::new(*re, *im)),
            ProfileDescriptor::Sampled { data, meta } => {
                let p = boundary::load_sampled(data, meta)?;
                if p.axis != axis {
                    return Err(Error::Config(format!(
                        "descriptor {} declares the {} axis but is used on the {} axis",
                        meta.display(),
                        p.axis.name(),
                        axis.name()
                    )));
                }
                p
            }
            ProfileDescriptor::Truncated { base, s_cut } => base.build(axis)?.truncate(*s_cut),
        };
        profile.validate(match self {
            ProfileDescriptor::Sampled { .. } => 1e-6,
            _ => 1e-10,
        })?;
        Ok(profile)
    }
}

fn default_delta() -> f64 {
    0.1
}
fn default_grid_n() -> usize {
    21
}
fn default_contour_n() -> usize {
    64
}
fn default_gamma() -> f64 {
    1.5
}
fn default_max_n() -> usize {
    1024
}
fn default_resolution_tol() -> f64 {
    1e-10
}
fn default_volterra_tol() -> f64 {
    1e-10
}
fn default_rh_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub x_axis: ProfileDescriptor,
    pub y_axis: ProfileDescriptor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_grid_n")]
    pub nx: usize,
    #[serde(default = "default_grid_n")]
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: default_grid_n(), ny: default_grid_n() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourConfig {
    #[serde(default = "default_contour_n")]
    pub n: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_resolution_tol")]
    pub resolution_tol: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            n: default_contour_n(),
            gamma: default_gamma(),
            max_n: default_max_n(),
            resolution_tol: default_resolution_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TolerancesConfig {
    #[serde(default = "default_volterra_tol")]
    pub volterra: f64,
    #[serde(default = "default_rh_tol")]
    pub rh: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig { volterra: default_volterra_tol(), rh: default_rh_tol() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub fields: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Verify,
    Exact,
    BoundaryCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub boundary: BoundaryConfig,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub outputs: Option<OutputConfig>,
    #[serde(default)]
    pub mode: Option<Mode>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if self.grid.nx < 2 || self.grid.ny < 2 {
            return Err(Error::Config("grid must have at least 2 points per axis".into()));
        }
        if !(self.tolerances.volterra > 0.0 && self.tolerances.rh > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.contour.gamma > 1.0) {
            return Err(Error::Config(format!("contour.gamma = {} must exceed 1", self.contour.gamma)));
        }
        Ok(())
    }

    pub fn point_options(&self) -> PointSolveOptions {
        PointSolveOptions {
            n_start: self.contour.n,
            n_max: self.contour.max_n.max(self.contour.n),
            gamma: self.contour.gamma,
            resolution_tol: self.contour.resolution_tol,
            self_tol: self.tolerances.rh,
            volterra: VolterraOptions { tol: self.tolerances.volterra, max_steps: 400_000 },
            rh: RhOptions { tol: self.tolerances.rh.min(1e-9), ..RhOptions::default() },
        }
    }
}

/// Per-point output of the pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct PointValues {
    pub e: C64,
    pub h: C64,
    pub f: f64,
    pub chi: f64,
    pub cond: f64,
    pub method: &'static str,
    pub defect_det: f64,
    pub defect_sym: f64,
    pub resolution_defect: f64,
    pub nodes_used: usize,
    pub msymm_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub result: Option<PointValues>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub delta: f64,
    pub points: Vec<GridPoint>,
}

impl FieldGrid {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn patch(&self) -> FieldPatch {
        let mut values = vec![None; self.xs.len() * self.ys.len()];
        for p in &self.points {
            if let Some(r) = &p.result {
                let i = self.xs.iter().position(|&v| v == p.x).unwrap();
                let j = self.ys.iter().position(|&v| v == p.y).unwrap();
                values[j * self.xs.len() + i] = Some((r.e, r.h));
            }
        }
        FieldPatch::new(self.xs.clone(), self.ys.clone(), values)
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct InvariantSummary {
    pub max_det: f64,
    pub max_identity: f64,
    pub max_hermiticity: f64,
    pub max_m22_short: f64,
    pub max_total: f64,
    pub max_msymm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Entry {
    pub axis: &'static str,
    pub position: f64,
    pub lim_e: LimitEstimate,
    pub lim_h: LimitEstimate,
    pub rhs_e: [f64; 2],
    pub rhs_h: [f64; 2],
    pub defect_e: f64,
    pub defect_h: f64,
    pub functional: Option<FunctionalEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCheckReport {
    pub entries: Vec<Theorem3Entry>,
    pub constants: ConstantsSummary,
    pub admissibility: AdmissibilityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsSummary {
    pub m1: [f64; 2],
    pub n1: [f64; 2],
    pub m2: [f64; 2],
    pub n2: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub nx: usize,
    pub ny: usize,
    pub delta: f64,
    pub points: usize,
    pub solved: usize,
    pub failed: usize,
}

/// The JSON report emitted next to the fields CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub mode: Mode,
    pub grid: GridMeta,
    pub pde: Option<PdeResiduals>,
    pub pde_note: Option<String>,
    pub zero_curvature: Option<f64>,
    pub invariants: Option<InvariantSummary>,
    pub roundtrip_max: Option<f64>,
    pub boundary: Option<BoundaryCheckReport>,
}

fn linspace(hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ERNSTMX_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("ERNSTMX_THREADS = '{v}' is not a number")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn fold_defects(d: &InvariantDefects) -> (f64, f64) {
    (d.det, d.identities.max(d.hermiticity).max(d.m22_short))
}

/// Inversion-symmetry defect max over `count` deterministic points on the
/// imaginary axis (always inside the far component of the contour
/// complement): m(z) - m(0) L m(1/z) L.
pub fn inversion_symmetry_defect(sol: &RhSolution, count: usize, seed: u64) -> Result<f64> {
    let sig = crate::linalg::lambda_signature();
    let mut rng = Rng64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let t = rng.range(0.4, 2.5) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let z = C64::new(0.0, t);
        let lhs = sol.evaluate(z)?;
        let rhs = sol.m_at_zero.mul(&sig).mul(&sol.evaluate(1.0 / z)?).mul(&sig);
        worst = worst.max(lhs.sub(&rhs).max_abs());
    }
    Ok(worst)
}

fn solve_point(
    px: &BoundaryProfile,
    py: &BoundaryProfile,
    x: f64,
    y: f64,
    opts: &PointSolveOptions,
    msymm_samples: usize,
) -> std::result::Result<PointValues, String> {
    let sol = rh::solve_at_point(px, py, x, y, opts).map_err(|e| e.to_string())?;
    let rec = reconstruct::recover(&sol.m_at_zero, x, y).map_err(|e| e.to_string())?;
    let defs = reconstruct::invariant_defects(&sol.m_at_zero);
    let (defect_det, defect_sym) = fold_defects(&defs);
    let msymm_defect = if msymm_samples > 0 {
        Some(
            inversion_symmetry_defect(&sol, msymm_samples, 0x5ee0 ^ (x.to_bits() ^ y.to_bits()))
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    Ok(PointValues {
        e: rec.e,
        h: rec.h,
        f: rec.f,
        chi: rec.chi,
        cond: sol.conditioning,
        method: sol.method.name(),
        defect_det,
        defect_sym,
        resolution_defect: sol.resolution_defect,
        nodes_used: sol.spec.nodes_per_circle,
        msymm_defect,
    })
}

fn sweep(cfg: &RunConfig, msymm_samples: usize) -> Result<FieldGrid> {
    let px = cfg.boundary.x_axis.build(Axis::X)?;
    let py = cfg.boundary.y_axis.build(Axis::Y)?;
    let opts = cfg.point_options();
    let hi = 1.0 - cfg.delta;
    let xs = linspace(hi, cfg.grid.nx);
    let ys = linspace(hi, cfg.grid.ny);
    let mut coords = Vec::new();
    for &y in &ys {
        for &x in &xs {
            if x + y < hi - 1e-12 {
                coords.push((x, y));
            }
        }
    }
    let pool = thread_pool()?;
    let results: Vec<GridPoint> = pool.install(|| {
        use rayon::prelude::*;
        coords
            .par_iter()
            .map(|&(x, y)| match solve_point(&px, &py, x, y, &opts, msymm_samples) {
                Ok(v) => GridPoint { x, y, result: Some(v), error: None },
                Err(e) => GridPoint { x, y, result: None, error: Some(e) },
            })
            .collect()
    });
    Ok(FieldGrid { xs, ys, delta: cfg.delta, points: results })
}

fn report_for(grid: &FieldGrid, mode: Mode, zero_curvature: Option<f64>, roundtrip: Option<f64>) -> ResidualReport {
    let solved = grid.points.iter().filter(|p| p.result.is_some()).count();
    let meta = GridMeta {
        nx: grid.xs.len(),
        ny: grid.ys.len(),
        delta: grid.delta,
        points: grid.points.len(),
        solved,
        failed: grid.failed(),
    };
    let (pde, pde_note) = match verify::pde_residual(&grid.patch()) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut inv = InvariantSummary::default();
    let mut any = false;
    for p in grid.points.iter().filter_map(|p| p.result.as_ref()) {
        any = true;
        inv.max_det = inv.max_det.max(p.defect_det);
        inv.max_identity = inv.max_identity.max(p.defect_sym);
        inv.max_total = inv.max_total.max(p.defect_det.max(p.defect_sym));
        if let Some(m) = p.msymm_defect {
            inv.max_msymm = Some(inv.max_msymm.unwrap_or(0.0).max(m));
        }
    }
    ResidualReport {
        mode,
        grid: meta,
        pde,
        pde_note,
        zero_curvature,
        invariants: if any { Some(inv) } else { None },
        roundtrip_max: roundtrip,
        boundary: None,
    }
}

/// Solve the grid and attach the finite-difference residual report.
pub fn run_solve(cfg: &RunConfig) -> Result<(FieldGrid, ResidualReport)> {
    let grid = sweep(cfg, 0)?;
    let report = report_for(&grid, Mode::Solve, None, None);
    Ok((grid, report))
}

/// Solve plus the heavier diagnostics: inversion symmetry samples per point,
/// the zero-curvature defect and the forward/recover roundtrip.
pub fn run_verify(cfg: &RunConfig) -> Result<(FieldGrid, ResidualReport)> {
    let grid = sweep(cfg, 5)?;
    let zc = verify::zero_curvature(&grid.patch(), C64::new(0.0, 1.3)).ok();
    let mut roundtrip = 0.0f64;
    for p in grid.points.iter().filter_map(|p| p.result.as_ref()) {
        if let Ok(m) = reconstruct::forward(p.e, p.h) {
            if let Ok(back) = reconstruct::recover(&m, 0.0, 0.0) {
                roundtrip = roundtrip.max((back.e - p.e).norm().max((back.h - p.h).norm()));
            }
        }
    }
    let report = report_for(&grid, Mode::Verify, zc, Some(roundtrip));
    Ok((grid, report))
}

/// Evaluate the exact family on the grid (oracle fields, no solves).
pub fn run_exact(cfg: &RunConfig) -> Result<(FieldGrid, ResidualReport)> {
    let (p, q) = match cfg.boundary.x_axis {
        ProfileDescriptor::Family { p, q } => (p, q),
        _ => {
            return Err(Error::Config(
                "exact mode needs a family descriptor on the x axis".into(),
            ))
        }
    };
    let fam = FamilyParams::new(p, q)?;
    let hi = 1.0 - cfg.delta;
    let xs = linspace(hi, cfg.grid.nx);
    let ys = linspace(hi, cfg.grid.ny);
    let mut points = Vec::new();
    for &y in &ys {
        for &x in &xs {
            if x + y >= hi - 1e-12 {
                continue;
            }
            let pt = exact::potentials(&fam, x, y);
            let defs = reconstruct::forward(pt.e, pt.h)
                .map(|m| reconstruct::invariant_defects(&m))
                .unwrap_or_default_defects();
            let (defect_det, defect_sym) = fold_defects(&defs);
            points.push(GridPoint {
                x,
                y,
                result: Some(PointValues {
                    e: pt.e,
                    h: pt.h,
                    f: pt.f,
                    chi: pt.chi,
                    cond: 1.0,
                    method: "exact",
                    defect_det,
                    defect_sym,
                    resolution_defect: 0.0,
                    nodes_used: 0,
                    msymm_defect: None,
                }),
                error: None,
            });
        }
    }
    let grid = FieldGrid { xs, ys, delta: cfg.delta, points };
    let report = report_for(&grid, Mode::Exact, None, None);
    Ok((grid, report))
}

trait DefaultDefects {
    fn unwrap_or_default_defects(self) -> InvariantDefects;
}

impl DefaultDefects for Result<InvariantDefects> {
    fn unwrap_or_default_defects(self) -> InvariantDefects {
        self.unwrap_or(InvariantDefects { det: f64::NAN, identities: f64::NAN, hermiticity: f64::NAN, m22_short: f64::NAN })
    }
}

/// Corner-limit checks against the frame formulas plus the wavefront
/// functional, at a few transverse positions on each axis.
pub fn run_boundary_check(cfg: &RunConfig) -> Result<BoundaryCheckReport> {
    let px = cfg.boundary.x_axis.build(Axis::X)?;
    let py = cfg.boundary.y_axis.build(Axis::Y)?;
    let opts = cfg.point_options();
    let positions: Vec<f64> = [0.2, 0.36, 0.5]
        .iter()
        .cloned()
        .filter(|&v| v < 1.0 - cfg.delta - 0.05)
        .collect();

    let mut entries = Vec::new();
    for &pos in &positions {
        entries.push(theorem3_entry(&px, &py, Axis::X, pos, &opts)?);
    }
    for &pos in &positions {
        entries.push(theorem3_entry(&px, &py, Axis::Y, pos, &opts)?);
    }

    let (m1, n1) = (px.m_limit(), px.n_limit());
    let (m2, n2) = (py.m_limit(), py.n_limit());
    Ok(BoundaryCheckReport {
        entries,
        constants: ConstantsSummary {
            m1: [m1.re, m1.im],
            n1: [n1.re, n1.im],
            m2: [m2.re, m2.im],
            n2: [n2.re, n2.im],
        },
        admissibility: verify::admissibility(m1, n1, m2, n2),
    })
}

/// One corner-limit check: `axis` names the direction whose derivative limit
/// is taken (X: x -> 0 at fixed transverse y = pos).
pub fn theorem3_entry(
    px: &BoundaryProfile,
    py: &BoundaryProfile,
    axis: Axis,
    pos: f64,
    opts: &PointSolveOptions,
) -> Result<Theorem3Entry> {
    let (transverse, own) = match axis {
        Axis::X => (py, px),
        Axis::Y => (px, py),
    };
    let alpha = own.alpha;
    let mut cache: Vec<(f64, C64, C64)> = Vec::new();
    let mut eval = |s: f64| -> Result<(C64, C64)> {
        if let Some(hit) = cache.iter().find(|(c, _, _)| *c == s) {
            return Ok((hit.1, hit.2));
        }
        let (x, y) = match axis {
            Axis::X => (s, pos),
            Axis::Y => (pos, s),
        };
        let sol = rh::solve_at_point(px, py, x, y, opts)?;
        let rec = reconstruct::recover(&sol.m_at_zero, x, y)?;
        cache.push((s, rec.e, rec.h));
        Ok((rec.e, rec.h))
    };
    let s0 = 0.04;
    let levels = 7;
    let lim_e = verify::corner_limit(&mut |s| eval(s).map(|v| v.0), alpha, s0, levels)?;
    let lim_h = verify::corner_limit(&mut |s| eval(s).map(|v| v.1), alpha, s0, levels)?;

    let frame = volterra::frame_at_zero(transverse, pos, &opts.volterra)?;
    let (rhs_e, rhs_h) = verify::corner_rhs(transverse, pos, own.m_limit(), own.n_limit(), &frame);
    let functional = if (alpha - 0.5).abs() < 1e-12 {
        Some(verify::boundary_functional(transverse, pos, &lim_e, &lim_h))
    } else {
        None
    };
    Ok(Theorem3Entry {
        axis: axis.name(),
        position: pos,
        lim_e,
        lim_h,
        rhs_e: [rhs_e.re, rhs_e.im],
        rhs_h: [rhs_h.re, rhs_h.im],
        defect_e: (lim_e.value() - rhs_e).norm(),
        defect_h: (lim_h.value() - rhs_h).norm(),
        functional,
    })
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// Emit the per-point fields as CSV (header fixed, deterministic order and
/// formatting; failed points carry explicit nan columns and are listed in
/// the report).
pub fn write_fields_csv(grid: &FieldGrid, path: &Path) -> Result<()> {
    let mut out = String::from("x,y,reE,imE,reH,imH,f,chi,cond,method,defect_det,defect_sym\n");
    for p in &grid.points {
        match &p.result {
            Some(r) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                    fmt_f64(r.e.re),
                    fmt_f64(r.e.im),
                    fmt_f64(r.h.re),
                    fmt_f64(r.h.im),
                    fmt_f64(r.f),
                    fmt_f64(r.chi),
                    fmt_f64(r.cond),
                    r.method,
                    fmt_f64(r.defect_det),
                    fmt_f64(r.defect_sym),
                ));
            }
            None => {
                out.push_str(&format!(
                    "{},{},nan,nan,nan,nan,nan,nan,nan,failed,nan,nan\n",
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                ));
            }
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_report_json<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
