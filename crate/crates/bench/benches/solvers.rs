use criterion::{black_box, criterion_group, criterion_main, Criterion};

use levirotor::dynamics::{analyze_trace, extract_phase, smooth_and_differentiate};
use levirotor::eddy::{
    build_disk_mesh, default_resolution, sample_field, EddySystem, MeshSymmetry,
};
use levirotor::gas::{swirl_flow_solve, GasSpec, SwirlOptions};
use levirotor::levitation::{magnetic_energy, Pose, VolumeQuadrature};
use levirotor::magnetostatics::stack_field;
use levirotor_bench::{noisy_trace, Fixture};

fn field(c: &mut Criterion) {
    let f = Fixture::reference();
    c.bench_function("stack_field", |b| {
        b.iter(|| stack_field(&f.stack, black_box(3.2e-3), black_box(f.plane_z)).unwrap())
    });
}

fn levitation(c: &mut Criterion) {
    let f = Fixture::reference();
    let quad = VolumeQuadrature::default();
    let pose = Pose::new(0.2e-3, 0.85e-3);
    c.bench_function("magnetic_energy_default_quadrature", |b| {
        b.iter(|| magnetic_energy(&f.disk, &f.stack, black_box(pose), &quad).unwrap())
    });
}

fn eddy(c: &mut Criterion) {
    let f = Fixture::reference();
    let res = default_resolution(&f.disk);
    let mut g = c.benchmark_group("eddy");
    g.sample_size(10);
    g.bench_function("assemble_and_factor", |b| {
        b.iter(|| {
            let mesh = build_disk_mesh(&f.disk, res, MeshSymmetry::Polar).unwrap();
            EddySystem::new(mesh, &f.disk).unwrap()
        })
    });
    let mesh = build_disk_mesh(&f.disk, res, MeshSymmetry::Polar).unwrap();
    let system = EddySystem::new(mesh, &f.disk).unwrap();
    let bz = sample_field(system.mesh(), &f.stack, 0.3e-3, f.plane_z).unwrap();
    g.bench_function("solve_offset_0.3mm", |b| {
        b.iter(|| system.solve(black_box(&bz), 15.0).unwrap())
    });
    g.finish();
}

fn gas(c: &mut Criterion) {
    let f = Fixture::reference();
    let gas = GasSpec::air(1e5);
    let gap = f.plane_z - f.stack.top_z() - 0.5 * f.disk.thickness;
    let mut g = c.benchmark_group("gas");
    g.sample_size(10);
    g.bench_function("swirl_default_grid", |b| {
        b.iter(|| swirl_flow_solve(&f.disk, gap, &gas, 1.0, &SwirlOptions::default()).unwrap())
    });
    g.finish();
}

fn dynamics(c: &mut Criterion) {
    let trace = noisy_trace();
    let phase = extract_phase(&trace).unwrap();
    c.bench_function("extract_phase_60k", |b| {
        b.iter(|| extract_phase(black_box(&trace)).unwrap())
    });
    c.bench_function("smooth_60k", |b| {
        b.iter(|| smooth_and_differentiate(black_box(&phase), 0.1).unwrap())
    });
    c.bench_function("analyze_trace_60k", |b| {
        b.iter(|| analyze_trace(black_box(&trace), 0.1, None).unwrap())
    });
}

criterion_group!(benches, field, levitation, eddy, gas, dynamics);
criterion_main!(benches);
