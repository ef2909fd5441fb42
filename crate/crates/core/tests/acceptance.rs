//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line (run with --nocapture to see the lines for passing
//! criteria; failures carry the same line in the panic message).
//!
//! The heavy end-to-end sweeps (criteria 1 and 2 share one sweep per family,
//! criterion 6 refines a patch) take several minutes each.

mod common;

use common::{mdiff, random_k, successive_approximation_frame};
use ernstmx_core::boundary::{Axis, BoundaryProfile};
use ernstmx_core::cauchy::{self, ContourFunction};
use ernstmx_core::exact::{self, FamilyParams};
use ernstmx_core::linalg::{lambda_signature, C64, Mat3, Rng64, ONE, ZERO};
use ernstmx_core::reconstruct;
use ernstmx_core::rh::{self, Method, PointSolveOptions, RhOptions};
use ernstmx_core::run::{
    self, BoundaryConfig, ContourConfig, GridConfig, ProfileDescriptor, RunConfig, TolerancesConfig,
};
use ernstmx_core::surface::{self, CircleId, Sheet};
use ernstmx_core::verify;
use ernstmx_core::volterra::{self, SpectralTarget, VolterraOptions};
use std::sync::Arc;
use std::time::Instant;

struct Criterion {
    id: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: &'static str) -> Criterion {
        Criterion { id, failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if ok {
            self.notes.push(detail);
        } else {
            self.failures.push(detail);
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if self.failures.is_empty() {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        println!("criterion {:>2}: {status} — {detail}", self.id);
        assert!(
            self.failures.is_empty(),
            "criterion {}: FAIL — {}",
            self.id,
            self.failures.join("; ")
        );
    }
}

fn family_config(p: f64, q: f64) -> RunConfig {
    RunConfig {
        boundary: BoundaryConfig {
            x_axis: ProfileDescriptor::Family { p, q },
            y_axis: ProfileDescriptor::Family { p, q },
        },
        delta: 0.3,
        grid: GridConfig { nx: 21, ny: 21 },
        contour: ContourConfig { n: 64, gamma: 1.5, max_n: 1024, resolution_tol: 1e-10 },
        tolerances: TolerancesConfig { volterra: 1e-10, rh: 1e-9 },
        outputs: None,
        mode: None,
    }
}

/// Criteria 1 and 2 share the three family sweeps: end-to-end field accuracy
/// against the closed form, and the invariant suite on every solved point.
#[test]
fn criteria_01_02_exact_family_and_invariants() {
    let mut c1 = Criterion::new("1");
    let mut c2 = Criterion::new("2");
    for (p, q) in [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)] {
        let fam = FamilyParams::new(p, q).unwrap();
        let cfg = family_config(p, q);
        let t0 = Instant::now();
        let (grid, _report) = run::run_verify(&cfg).expect("sweep");
        let dt = t0.elapsed().as_secs_f64();

        let failed = grid.failed();
        let mut err_e = 0.0f64;
        let mut err_h = 0.0f64;
        let mut det = 0.0f64;
        let mut sym = 0.0f64;
        let mut msymm = 0.0f64;
        let mut bad_points = 0usize;
        for pt in grid.points.iter() {
            let Some(r) = &pt.result else { continue };
            let hx = exact::h_value(&fam, pt.x, pt.y);
            err_e = err_e.max((r.e - ONE).norm());
            err_h = err_h.max((r.h - hx).norm());
            det = det.max(r.defect_det);
            sym = sym.max(r.defect_sym);
            msymm = msymm.max(r.msymm_defect.unwrap_or(0.0));
            if r.defect_det >= 1e-8 || r.defect_sym >= 1e-8 || r.msymm_defect.unwrap_or(0.0) >= 1e-6 {
                bad_points += 1;
            }
        }
        c1.check(
            failed == 0 && err_e < 1e-4 && err_h < 1e-4,
            format!("(p,q)=({p},{q}): max|E-1|={err_e:.2e}, max|H-Hx|={err_h:.2e}, failed={failed}, {dt:.0}s"),
        );
        c2.check(
            det < 1e-8 && sym < 1e-8 && msymm < 1e-6,
            format!(
                "(p,q)=({p},{q}): det={det:.2e}, identities/herm/m22={sym:.2e}, msymm={msymm:.2e}, {bad_points} points over tolerance"
            ),
        );
    }
    let r1 = std::panic::catch_unwind(std::panic::AssertUnwindSafe(move || c1.finish()));
    c2.finish();
    r1.unwrap();
}

#[test]
fn criterion_03_eigenfunction_invariants() {
    let mut c = Criterion::new("3");
    let sig = lambda_signature();
    let mut rng = Rng64::new(77);
    let profiles = [
        exact::profile(&FamilyParams::new(0.6, 0.8).unwrap(), Axis::X),
        exact::profile(&FamilyParams::new(0.0, 1.0).unwrap(), Axis::Y),
    ];
    let opts = VolterraOptions::default();
    let mut worst_det = 0.0f64;
    let mut worst_sheet = 0.0f64;
    let mut worst_conj = 0.0f64;
    // 40 batches x 25 base points = 1000 random (s, k) samples
    for batch in 0..40 {
        let profile = &profiles[batch % 2];
        let s = rng.range(0.02, 0.8);
        let ks: Vec<C64> = (0..25).map(|_| random_k(&mut rng)).collect();
        let mut targets = Vec::new();
        for &k in &ks {
            targets.push(SpectralTarget::DirectK { k, sheet: Sheet::Plus });
            targets.push(SpectralTarget::DirectK { k, sheet: Sheet::Minus });
            targets.push(SpectralTarget::DirectK { k: k.conj(), sheet: Sheet::Plus });
        }
        let fr = volterra::solve_frame(profile, s, &targets, &opts).expect("frame batch");
        let f = profile.f(s);
        let scale = f.powf(1.5);
        for (i, _) in ks.iter().enumerate() {
            let plus = fr.values[3 * i];
            let minus = fr.values[3 * i + 1];
            let conj = fr.values[3 * i + 2];
            worst_det = worst_det.max((plus.det() - C64::new(scale, 0.0)).norm() / scale);
            worst_sheet =
                worst_sheet.max(plus.sub(&sig.mul(&minus).mul(&sig)).max_abs() / plus.max_abs());
            let rhs = sig
                .mul(&plus.inverse().unwrap().transpose())
                .mul(&sig)
                .scale(C64::new(f, 0.0));
            worst_conj = worst_conj.max(conj.conj().sub(&rhs).max_abs() / plus.max_abs());
        }
    }
    c.check(
        worst_det < 1e-8 && worst_sheet < 1e-8 && worst_conj < 1e-8,
        format!("1000 samples: det={worst_det:.2e}, sheet={worst_sheet:.2e}, conj={worst_conj:.2e}"),
    );

    // independent oracle on the small-parameter range
    let mut worst_oracle = 0.0f64;
    for i in 0..30 {
        let profile = &profiles[i % 2];
        let s = rng.range(0.02, 0.2);
        let target = SpectralTarget::DirectK {
            k: random_k(&mut rng),
            sheet: if rng.next_f64() < 0.5 { Sheet::Plus } else { Sheet::Minus },
        };
        let fast = volterra::solve_frame(profile, s, &[target], &opts).unwrap().values[0];
        let slow = successive_approximation_frame(profile, s, &target, 12, 40);
        worst_oracle = worst_oracle.max(mdiff(&fast, &slow));
    }
    c.check(worst_oracle < 1e-9, format!("series oracle defect {worst_oracle:.2e}"));
    c.finish();
}

fn e13() -> Mat3 {
    let mut m = Mat3::zero();
    m.set(0, 2, ONE);
    m
}

fn nilpotent_w(spec: &Arc<surface::ContourSpec>, psi: impl Fn(C64) -> C64) -> ContourFunction {
    let n = spec.nodes_per_circle;
    let mut samples = Vec::with_capacity(2 * n);
    for &z in spec.nodes(CircleId::Gamma0) {
        samples.push(e13().scale(-psi(z)));
    }
    samples.extend(std::iter::repeat_n(Mat3::zero(), n));
    ContourFunction::new(Arc::clone(spec), samples)
}

#[test]
fn criterion_04_synthetic_rh_oracle() {
    let mut c = Criterion::new("4");
    // polynomial jump: exactly representable, solution exact to rounding
    let spec = Arc::new(surface::build_contour(0.25, 0.25, 64, 1.5).unwrap());
    let w = nilpotent_w(&spec, |z| z + ONE);
    let sol = rh::solve(&w, &RhOptions::default()).unwrap();
    let d0 = sol.m_at_zero.sub(&Mat3::identity()).max_abs();
    let z = C64::new(-1.5, 0.0);
    let din = sol
        .evaluate(z)
        .unwrap()
        .sub(&Mat3::identity().add(&e13().scale(z + ONE)))
        .max_abs();
    c.check(d0 < 1e-10 && din < 1e-10, format!("polynomial jump: m(0) defect {d0:.2e}, interior {din:.2e}"));

    // rational jump: spectral decay, ratio > 100 per doubling to the floor
    let pole = C64::new(-12.0, 6.0);
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let spec = Arc::new(surface::build_contour(0.25, 0.25, n, 1.5).unwrap());
        let w = nilpotent_w(&spec, |z| ONE / (z - pole));
        let sol = rh::solve(&w, &RhOptions { method: Method::Direct, ..Default::default() }).unwrap();
        let ze = C64::new(-2.0, 0.4);
        let e = sol
            .evaluate(ze)
            .unwrap()
            .sub(&Mat3::identity().add(&e13().scale(ONE / (ze - pole))))
            .max_abs()
            .max(sol.m_at_zero.sub(&Mat3::identity()).max_abs());
        errs.push(e);
    }
    let mut spectral = true;
    for k in 0..errs.len() - 1 {
        if !(errs[k + 1] < errs[k] / 100.0 || errs[k + 1] < 1e-13) {
            spectral = false;
        }
    }
    c.check(spectral, format!("rational jump errors {errs:?}"));
    c.finish();
}

#[test]
fn criterion_05_boundary_edge_consistency() {
    let mut c = Criterion::new("5");
    let profile = exact::profile(&FamilyParams::bell_szekeres(), Axis::X);
    let delta = 0.1;
    for x in [0.1, 0.4, 0.7 * (1.0 - delta)] {
        // the frame singularities close in on the loop as the cut image
        // stretches; the outermost abscissa needs a deeper mode budget
        let n_max = if x > 0.5 { 4096 } else { 1024 };
        let opts = PointSolveOptions {
            n_start: 64,
            n_max,
            self_tol: 1e-9,
            ..PointSolveOptions::default()
        };
        let defect = rh::verify_boundary_solution(&profile, x, &opts).expect("edge solve");
        c.check(defect < 1e-6, format!("x={x}: defect {defect:.2e} (cap {n_max})"));
    }
    c.finish();
}

#[test]
fn criterion_06_residual_refinement() {
    let mut c = Criterion::new("6");
    let fam = FamilyParams::new(0.6, 0.8).unwrap();
    let px = exact::profile(&fam, Axis::X);
    let py = exact::profile(&fam, Axis::Y);
    let opts = PointSolveOptions {
        n_start: 128,
        n_max: 1024,
        self_tol: 1e-11,
        volterra: VolterraOptions { tol: 1e-11, max_steps: 600_000 },
        ..PointSolveOptions::default()
    };
    let center = (0.16, 0.16);
    let mut pde_max = Vec::new();
    let mut zc_max = Vec::new();
    for &h in &[0.02, 0.01, 0.005] {
        let n = 9;
        let half = (n - 1) as f64 / 2.0;
        let xs: Vec<f64> = (0..n).map(|i| center.0 + h * (i as f64 - half)).collect();
        let ys: Vec<f64> = (0..n).map(|j| center.1 + h * (j as f64 - half)).collect();
        let mut values = Vec::with_capacity(n * n);
        for &y in &ys {
            for &x in &xs {
                let sol = rh::solve_at_point(&px, &py, x, y, &opts).expect("patch solve");
                let rec = reconstruct::recover(&sol.m_at_zero, x, y).unwrap();
                values.push(Some((rec.e, rec.h)));
            }
        }
        let patch = verify::FieldPatch::new(xs, ys, values);
        let r = verify::pde_residual(&patch).unwrap();
        pde_max.push(r.r1.max.max(r.r2.max));
        zc_max.push(verify::zero_curvature(&patch, C64::new(0.0, 1.3)).unwrap());
    }
    let o1 = (pde_max[0] / pde_max[1]).log2();
    let o2 = (pde_max[1] / pde_max[2]).log2();
    c.check(
        o1 >= 3.5 && o2 >= 3.5,
        format!("pde residual orders {o1:.2}, {o2:.2} (maxes {pde_max:?})"),
    );
    let z1 = (zc_max[0] / zc_max[1]).log2();
    let z2 = (zc_max[1] / zc_max[2]).log2();
    c.check(
        z1 >= 3.5 && z2 >= 3.5,
        format!("zero-curvature orders {z1:.2}, {z2:.2} (maxes {zc_max:?})"),
    );
    c.finish();
}

#[test]
fn criterion_07_corner_limits_and_functional() {
    let mut c = Criterion::new("7");
    let fam = FamilyParams::new(0.6, 0.8).unwrap();
    let px = exact::profile(&fam, Axis::X);
    let py = exact::profile(&fam, Axis::Y);
    let consts = exact::boundary_constants(&fam);
    let opts = PointSolveOptions {
        n_start: 64,
        n_max: 1024,
        self_tol: 1e-9,
        ..PointSolveOptions::default()
    };
    let mut functional_values = Vec::new();
    for y in [0.2, 0.36, 0.5] {
        let entry = run::theorem3_entry(&px, &py, Axis::X, y, &opts).expect("corner limits");
        // the H-limit must match the frame formula within the band
        c.check(
            entry.defect_h <= entry.lim_h.band.max(1e-9),
            format!("y={y}: |H-limit defect| {:.2e} vs band {:.2e}", entry.defect_h, entry.lim_h.band),
        );
        let f = entry.functional.expect("alpha = 1/2");
        c.check(
            (f.value - 1.0).abs() < 1e-2,
            format!("y={y}: functional {:.6} (band {:.1e})", f.value, f.uncertainty),
        );
        functional_values.push(f.value);
    }
    // transverse constancy within the reported uncertainty scale
    let spread = functional_values.iter().cloned().fold(f64::MIN, f64::max)
        - functional_values.iter().cloned().fold(f64::MAX, f64::min);
    c.check(spread < 1e-2, format!("functional spread across y: {spread:.2e}"));

    let adm = verify::admissibility(consts.m1, consts.n1, consts.m2, consts.n2);
    c.check(
        adm.admissible && (adm.value_x - 1.0).abs() < 1e-12,
        format!("admissible = {}, values ({:.3}, {:.3})", adm.admissible, adm.value_x, adm.value_y),
    );
    c.finish();
}

#[test]
fn criterion_08_small_norm_path() {
    let mut c = Criterion::new("8");
    let px = BoundaryProfile::shock(Axis::X, C64::new(0.05, 0.02));
    let py = BoundaryProfile::shock(Axis::Y, C64::new(0.05, -0.02));
    let spec = Arc::new(surface::build_contour(0.2, 0.25, 64, 1.5).unwrap());
    let (_v, w) = rh::assemble_jump(&px, &py, &spec, &VolterraOptions::default()).unwrap();
    let sol_auto = rh::solve(&w, &RhOptions::default()).unwrap();
    c.check(
        sol_auto.norm_proxy < 0.5 && sol_auto.method == rh::SolvedWith::Neumann,
        format!("norm proxy {:.3}, auto method {}", sol_auto.norm_proxy, sol_auto.method.name()),
    );
    let sol_d = rh::solve(&w, &RhOptions { method: Method::Direct, ..Default::default() }).unwrap();
    let d = sol_auto.m_at_zero.sub(&sol_d.m_at_zero).max_abs();
    c.check(d < 1e-9, format!("neumann/direct agreement {d:.2e}"));
    c.finish();
}

#[test]
fn criterion_09_domain_of_dependence() {
    let mut c = Criterion::new("9");
    let fam = FamilyParams::bell_szekeres();
    let px = exact::profile(&fam, Axis::X);
    let py = exact::profile(&fam, Axis::Y);
    let txp = px.clone().truncate(0.5);
    let typ = py.clone().truncate(0.5);
    let opts = PointSolveOptions { n_start: 64, n_max: 128, self_tol: 1e-6, ..Default::default() };
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for i in 0..6 {
        for j in 0..6 {
            let (x, y) = (0.45 * i as f64 / 5.0, 0.45 * j as f64 / 5.0);
            if x + y >= 0.9 {
                continue;
            }
            let full = rh::solve_at_point(&px, &py, x, y, &opts).unwrap();
            let cut = rh::solve_at_point(&txp, &typ, x, y, &opts).unwrap();
            worst = worst.max(full.m_at_zero.sub(&cut.m_at_zero).max_abs());
            count += 1;
        }
    }
    c.check(worst < 1e-8, format!("{count} points with x, y <= 0.45: max deviation {worst:.2e}"));
    c.finish();
}

#[test]
fn criterion_10_plemelj_and_residues() {
    let mut c = Criterion::new("10");
    let spec = Arc::new(surface::build_contour(0.25, 0.25, 64, 1.5).unwrap());
    let n = spec.nodes_per_circle;

    // band-limited random densities: jump identity to 1e-12
    let mut rng = Rng64::new(4242);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let coeffs: Vec<(i64, C64, C64)> =
            (-10..10).map(|m| (m, rng.next_c64(), rng.next_c64())).collect();
        let mut samples = Vec::with_capacity(2 * n);
        for (ci, id) in [(0usize, CircleId::Gamma0), (1, CircleId::Gamma1)] {
            let circle = spec.circle(id);
            for &z in spec.nodes(id) {
                let zeta = circle.zeta(z);
                let mut acc = ZERO;
                for (m, a0, a1) in &coeffs {
                    let a = if ci == 0 { *a0 } else { *a1 };
                    let t = if *m >= 0 {
                        zeta.powi(*m as i32)
                    } else {
                        (ONE / zeta).powi(-*m as i32)
                    };
                    acc += a * t;
                }
                samples.push(Mat3::identity().scale(acc));
            }
        }
        let g = ContourFunction::new(Arc::clone(&spec), samples);
        let jump = cauchy::cauchy_plus(&g).sub(&cauchy::cauchy_minus(&g)).sub(&g).max_abs();
        worst = worst.max(jump / g.max_abs());
    }
    c.check(worst < 1e-12, format!("Plemelj jump defect {worst:.2e}"));

    // constant density: clockwise residue signs
    let mut samples = vec![Mat3::identity(); n];
    samples.extend(std::iter::repeat_n(Mat3::zero(), n));
    let g = ContourFunction::new(Arc::clone(&spec), samples);
    let inside = cauchy::cauchy_off(&g, C64::new(spec.gamma0.center, 0.1)).unwrap();
    let outside = cauchy::cauchy_off(&g, ZERO).unwrap();
    let d_in = inside.add(&Mat3::identity()).max_abs();
    let d_out = outside.max_abs();
    c.check(
        d_in < 1e-13 && d_out < 1e-13,
        format!("constant-density values: inside defect {d_in:.2e}, outside {d_out:.2e}"),
    );
    c.finish();
}
