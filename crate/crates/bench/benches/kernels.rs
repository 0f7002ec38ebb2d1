use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use bohmctx_core::guidance::{GuidingField, VelocityModel};
use bohmctx_core::numerics::{make_gaussian, GaussianPacketSpec, PotentialSpec, Propagator, SpatialGrid, UnitsConfig};
use bohmctx_core::pointer::{
    integrate_pointer, ApparatusBlock, Branch, PointerModel, PointerRunOptions, Schedule, DEFAULT_RATIO_THRESHOLD,
};
use bohmctx_core::Outcome;

fn propagation_step(c: &mut Criterion) {
    let units = UnitsConfig::default();
    let mut group = c.benchmark_group("propagation_step");
    for n in [1024usize, 4096] {
        let grid = SpatialGrid::line(n, -32.0, 32.0).unwrap();
        let psi = make_gaussian(&grid, &GaussianPacketSpec::new_1d(0.0, 1.0, 5.0)).unwrap();
        let step = Propagator::new(&grid, 1, &PotentialSpec::Free, 0.005, &units).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut state = psi.clone();
            b.iter(|| step.step(black_box(&mut state)));
        });
    }
    group.finish();
}

fn velocity_frame(c: &mut Criterion) {
    let units = UnitsConfig::default();
    let mut group = c.benchmark_group("velocity_frame");
    for n in [1024usize, 4096] {
        let grid = SpatialGrid::line(n, -32.0, 32.0).unwrap();
        let psi = make_gaussian(&grid, &GaussianPacketSpec::new_1d(0.0, 1.0, 5.0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| psi.velocity_frame(VelocityModel::ScalarGuidance, &units, 0.0).unwrap());
        });
    }
    group.finish();
}

fn pointer_model(n_app: usize) -> PointerModel {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PointerModel::new(
        [
            Branch {
                label: Outcome::Plus,
                amplitude: h,
                system_center: Schedule::drift(0.0, 0.5, 1.0).unwrap(),
                apparatus_sign: 1.0,
            },
            Branch {
                label: Outcome::Minus,
                amplitude: h,
                system_center: Schedule::drift(0.0, -0.5, 1.0).unwrap(),
                apparatus_sign: -1.0,
            },
        ],
        1.0,
        vec![ApparatusBlock {
            name: "apparatus".into(),
            count: n_app,
            sigma: 1.0,
            ramp: Schedule::ramp(0.0, 1.0, 6.0).unwrap(),
        }],
        1.0,
        false,
        UnitsConfig::default(),
    )
    .unwrap()
}

fn pointer_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("pointer_ensemble_100_runs");
    group.sample_size(10);
    let opts = PointerRunOptions {
        n_records: 200,
        max_step: 0.005,
        ratio_threshold: DEFAULT_RATIO_THRESHOLD,
    };
    for n_app in [1usize, 16, 64] {
        let model = pointer_model(n_app);
        let initial: Vec<Vec<f64>> = (0..100).map(|i| model.sample_initial(7, i)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n_app), &n_app, |b, _| {
            b.iter(|| integrate_pointer(&model, black_box(&initial), &opts).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, propagation_step, velocity_frame, pointer_ensemble);
criterion_main!(benches);
