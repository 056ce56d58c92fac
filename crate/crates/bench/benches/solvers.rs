use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use chainpc::atomistic::{self, AtomisticObjective};
use chainpc::cauchy_born::StressInverter;
use chainpc::corrector;
use chainpc::force::ExternalForce;
use chainpc::optimize::Objective;
use chainpc::{Displacement, PotentialParams, SolverConfig};

fn bench_energy_and_residual(c: &mut Criterion) {
    let params = PotentialParams::copper();
    let force = ExternalForce::zero();
    let n = 1000;
    let objective = AtomisticObjective::new(&params, &force, n).unwrap();
    let x: Vec<f64> = (0..n)
        .map(|l| 0.02 * (-0.5f64).powi(l as i32 % 20))
        .collect();
    let mut r = vec![0.0; n];
    c.bench_function("atomistic energy+residual n=1000", |b| {
        b.iter(|| {
            objective
                .energy_and_residual(black_box(&x), &mut r)
                .unwrap()
        })
    });
}

fn bench_hessian_eigenvalue(c: &mut Criterion) {
    let params = PotentialParams::copper();
    let u = Displacement::zero(1000);
    let h = atomistic::hessian(&params, &u).unwrap();
    c.bench_function("smallest eigenvalue n=1000", |b| {
        b.iter(|| black_box(&h).smallest_eigenvalue())
    });
}

fn bench_ground_state_solve(c: &mut Criterion) {
    let params = PotentialParams::copper();
    let force = ExternalForce::zero();
    let cfg = SolverConfig::default();
    c.bench_function("ground-state solve n=200", |b| {
        b.iter_batched(
            || (),
            |_| atomistic::solve(&params, &force, 200, None, &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_stress_inversion(c: &mut Criterion) {
    let params = PotentialParams::copper();
    let inverter = StressInverter::new(&params).unwrap();
    let targets: Vec<f64> = (0..64).map(|k| 0.3 * ((k as f64) - 32.0) / 32.0).collect();
    c.bench_function("stress inversion x64", |b| {
        b.iter(|| {
            for t in &targets {
                black_box(inverter.invert(*t).unwrap());
            }
        })
    });
}

fn bench_corrector_solve(c: &mut Criterion) {
    let params = PotentialParams::copper();
    let cfg = SolverConfig::default();
    c.bench_function("corrector solve L=20", |b| {
        b.iter(|| corrector::solve_corrector(&params, 20, -5e-4, &cfg, None).unwrap())
    });
}

criterion_group!(
    benches,
    bench_energy_and_residual,
    bench_hessian_eigenvalue,
    bench_ground_state_solve,
    bench_stress_inversion,
    bench_corrector_solve
);
criterion_main!(benches);
