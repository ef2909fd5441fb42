//! Benchmarks for the hot paths: the batched frame integration, the Cauchy
//! boundary transform, and the full per-point solve at two node counts.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ernstmx_core::boundary::Axis;
use ernstmx_core::cauchy::{cauchy_minus, ContourFunction};
use ernstmx_core::exact::{self, FamilyParams};
use ernstmx_core::linalg::Mat3;
use ernstmx_core::rh::{self, PointSolveOptions};
use ernstmx_core::surface::{build_contour, CircleId};
use ernstmx_core::volterra::{self, SpectralTarget, VolterraOptions};
use ernstmx_core::linalg::C64;
use std::sync::Arc;

fn bench_frame_batch(c: &mut Criterion) {
    let fam = FamilyParams::bell_szekeres();
    let profile = exact::profile(&fam, Axis::X);
    let (x, y) = (0.3, 0.25);
    let spec = build_contour(x, y, 64, 1.5).unwrap();
    let targets: Vec<SpectralTarget> = spec
        .nodes(CircleId::Gamma0)
        .iter()
        .map(|&z| SpectralTarget::ContourNode { z, x, y })
        .collect();
    let opts = VolterraOptions::default();
    c.bench_function("frame_batch_64", |b| {
        b.iter(|| volterra::solve_frame(&profile, x, &targets, &opts).unwrap())
    });
}

fn bench_cauchy_minus(c: &mut Criterion) {
    let spec = Arc::new(build_contour(0.25, 0.25, 128, 1.5).unwrap());
    let samples: Vec<Mat3> = spec
        .nodes(CircleId::Gamma0)
        .iter()
        .chain(spec.nodes(CircleId::Gamma1))
        .map(|&z| Mat3::identity().scale((0.2 * z).exp()))
        .collect();
    let g = ContourFunction::new(spec, samples);
    c.bench_function("cauchy_minus_128", |b| b.iter(|| cauchy_minus(&g)));
}

fn bench_point_solve(c: &mut Criterion) {
    let fam = FamilyParams::bell_szekeres();
    let px = exact::profile(&fam, Axis::X);
    let py = exact::profile(&fam, Axis::Y);
    let mut group = c.benchmark_group("point_solve");
    group.sample_size(10);
    for n in [64usize, 256] {
        let opts = PointSolveOptions {
            n_start: n,
            n_max: n,
            self_tol: 1e-6,
            ..PointSolveOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &opts, |b, opts| {
            b.iter(|| rh::solve_at_point(&px, &py, 0.25, 0.25, opts).unwrap())
        });
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let fam = FamilyParams::bell_szekeres();
    let px = exact::profile(&fam, Axis::X);
    let py = exact::profile(&fam, Axis::Y);
    let opts = PointSolveOptions { n_start: 128, n_max: 128, self_tol: 1e-6, ..Default::default() };
    let sol = rh::solve_at_point(&px, &py, 0.25, 0.25, &opts).unwrap();
    c.bench_function("evaluate_off_contour", |b| {
        b.iter(|| sol.evaluate(C64::new(0.0, 1.3)).unwrap())
    });
}

criterion_group!(benches, bench_frame_batch, bench_cauchy_minus, bench_point_solve, bench_evaluate);
criterion_main!(benches);
