use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use quasigraph::calculus::{higher_grad_lengths, laplacian_values, p_laplacian_values};
use quasigraph::energy::EstimatorSettings;
use quasigraph::{solve, AbSource, ModelSpec, Problem, SolverConfig, SystemKind, SystemSpec};
use quasigraph_bench::{ring, wave};

fn spec(model: ModelSpec, lambda: f64) -> SystemSpec {
    SystemSpec {
        system: SystemKind::FinitePoly,
        p: 2.5,
        q: 3.0,
        m1: 1,
        m2: 1,
        lambda,
        arity: 2,
        model,
        growth: None,
        ab_source: AbSource::Estimate,
        estimator: EstimatorSettings::default(),
        smoothing: 1e-8,
    }
}

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators");
    for n in [100, 1000, 10_000] {
        let g = ring(n);
        let u = wave(n);
        group.bench_with_input(BenchmarkId::new("laplacian", n), &n, |b, _| {
            b.iter(|| laplacian_values(black_box(&g), black_box(&u)))
        });
        group.bench_with_input(BenchmarkId::new("p_laplacian_3", n), &n, |b, _| {
            b.iter(|| p_laplacian_values(black_box(&g), black_box(&u), 3.0))
        });
        group.bench_with_input(BenchmarkId::new("grad_length_m3", n), &n, |b, _| {
            b.iter(|| higher_grad_lengths(black_box(&g), black_box(&u), 3))
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy");
    for n in [100, 1000] {
        let g = ring(n);
        let model = ModelSpec::Power { alpha: 1.0, beta: 1.0, s_exp: 3.0, t_exp: 3.5 };
        let problem = Problem::new(&spec(model, 0.7), &g, None).expect("problem");
        let mut x = wave(n);
        x.extend(wave(n).iter().rev());
        group.bench_with_input(BenchmarkId::new("objective_and_gradient", n), &n, |b, _| {
            b.iter(|| problem.objective(black_box(&x)))
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let g = ring(10);
    let model = ModelSpec::PlateauOscillator { beta: 1.0, ratio: 60.0, a0: 1.0, s_exp: 2.0, t_exp: 2.0, blend: 0.2 };
    let mut s = spec(model, 1.0);
    s.p = 2.0;
    s.q = 2.0;
    let problem = Problem::new(&s, &g, None).expect("problem");
    let cfg = SolverConfig { seed: 1, ..Default::default() };
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("oscillator_ring10", |b| b.iter(|| solve(black_box(&problem), &cfg).expect("solve")));
    group.finish();
}

criterion_group!(benches, operators, energy, solver);
criterion_main!(benches);
