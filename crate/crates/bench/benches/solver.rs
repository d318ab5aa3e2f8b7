use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracvi::{compute_rho, gamma, picard_solve, solve_vi, verify, AffineOperator, FeasibleSet, FracIntegrator, ViInstance, ViOptions};
use fracvi_bench::{example_problem, smooth_function};
use std::hint::black_box;

fn special(c: &mut Criterion) {
    c.bench_function("gamma", |b| b.iter(|| gamma(black_box(2.6))));
    c.bench_function("compute_rho", |b| b.iter(|| compute_rho(black_box(0.5), black_box(0.7), black_box(1.6))));
}

fn frac_integral(c: &mut Criterion) {
    let mut group = c.benchmark_group("frac_integral_apply");
    for n in [250, 1000, 4000] {
        let phi = smooth_function(0.7, n);
        let integ = FracIntegrator::new(1.6, phi.grid()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &phi, |b, phi| b.iter(|| integ.apply(phi).unwrap()));
    }
    group.finish();
}

fn vi(c: &mut Criterion) {
    let op = AffineOperator::new(vec![vec![3.0, 0.0], vec![0.0, 3.0]], vec![0.0, 0.0]).unwrap();
    let set = FeasibleSet::orthant(2);
    let w = [std::f64::consts::TAU, -1.4];
    let inst = ViInstance::new(&set, &w, &op).unwrap();
    let opts = ViOptions::default();
    c.bench_function("solve_vi_strongly_monotone", |b| b.iter(|| solve_vi(black_box(&inst), &opts).unwrap()));

    let skew = AffineOperator::new(vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).unwrap();
    let bounded = FeasibleSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let w = [0.3, -0.2];
    let inst = ViInstance::new(&bounded, &w, &skew).unwrap();
    c.bench_function("solve_vi_monotone", |b| b.iter(|| solve_vi(black_box(&inst), &opts).unwrap()));
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("picard_solve");
    group.sample_size(10);
    for n in [250, 1000] {
        let problem = example_problem(n);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| picard_solve(&problem.spec, &problem.solver, &problem.policy).unwrap())
        });
    }
    group.finish();

    let problem = example_problem(1000);
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    group.bench_function("example", |b| b.iter(|| verify(&problem.spec, &problem.sampling, &problem.claimed).unwrap()));
    group.finish();
}

criterion_group!(benches, special, frac_integral, vi, solver);
criterion_main!(benches);
