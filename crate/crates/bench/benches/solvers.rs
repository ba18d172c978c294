use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use piezobeam_bench::system;
use piezobeam_core::fem::assemble;
use piezobeam_core::solvers::{default_shift, eigenmodes, FactorizedOperator, MidpointStepper, StepState};
use piezobeam_core::{presets, Regime, Variant};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for n in [32, 128, 512] {
        let spec = presets::spec(Variant::PatchMT, Regime::FullMagnetic);
        g.bench_with_input(BenchmarkId::new("patch-mt", n), &n, |b, &n| {
            b.iter(|| assemble(&spec, presets::mesh_for(&spec, n)).unwrap())
        });
    }
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let mut g = c.benchmark_group("factorize");
    for n in [32, 128, 512] {
        let s = system(Variant::PatchEB, Regime::FullMagnetic, n);
        let dt = 1e-3;
        let a = s.mass.combine(1.0, &s.stiffness, dt * dt / 4.0);
        g.bench_with_input(BenchmarkId::new("step-matrix", n), &a, |b, a| {
            b.iter(|| FactorizedOperator::new(black_box(a)).unwrap())
        });
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let mut g = c.benchmark_group("midpoint-step");
    for n in [32, 128, 512] {
        let s = system(Variant::SingleMT, Regime::FullMagnetic, n);
        let stepper = MidpointStepper::new(&s, 1e-3).unwrap();
        let mut state = StepState::zeros(s.n());
        state.x = DVector::from_fn(s.n(), |i, _| ((i * 7919) % 13) as f64 * 1e-3);
        g.bench_with_input(BenchmarkId::new("single-mt", n), &state, |b, st| {
            b.iter(|| stepper.step(black_box(st), &[0.5]))
        });
    }
    g.finish();
}

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigenmodes");
    g.sample_size(10);
    for n in [32, 128] {
        let s = system(Variant::PatchEB, Regime::ElectrostaticReduced, n);
        let shift = default_shift(&s.mass, &s.stiffness);
        g.bench_with_input(BenchmarkId::new("patch-eb-6", n), &s, |b, s| {
            b.iter(|| eigenmodes(&s.mass, &s.stiffness, 6, shift).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, factorization, stepping, modes);
criterion_main!(benches);
