use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgate_core::optimizer::{optimize_start, run_multistart};
use qgate_core::oracle::integrate_sequence;
use qgate_core::pathways::{bucket_amplitudes, mcube_point};
use qgate_core::propagator::sequence_unitary;
use qgate_core::{
    gate_diagonal, ConstraintMode, ConstraintSpec, EnvelopeSpec, OptimizerConfig, PulseSequence, Subsystem,
};

fn sequence(n: usize) -> PulseSequence {
    let areas: Vec<f64> = (0..n).map(|k| 1.3 + 2.1 * k as f64).collect();
    let phis: Vec<f64> = (0..n).map(|k| 0.4 + 0.9 * k as f64).collect();
    PulseSequence::from_areas_and_angles(&areas, &phis).unwrap()
}

fn config(n: usize, starts: usize) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(n, ConstraintSpec::new(0.1, ConstraintMode::AbsB).unwrap());
    cfg.n_starts = starts;
    cfg.seed = 1;
    cfg
}

fn propagators(c: &mut Criterion) {
    let mut g = c.benchmark_group("propagator");
    for n in [2, 4, 6] {
        let seq = sequence(n);
        g.bench_with_input(BenchmarkId::new("sequence_unitary_v", n), &seq, |b, s| {
            b.iter(|| sequence_unitary(black_box(s), Subsystem::V))
        });
        g.bench_with_input(BenchmarkId::new("gate_diagonal", n), &seq, |b, s| {
            b.iter(|| gate_diagonal(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn pathways(c: &mut Criterion) {
    let mut g = c.benchmark_group("pathways");
    for n in [3, 6] {
        let seq = sequence(n);
        g.bench_with_input(BenchmarkId::new("buckets_v", n), &seq, |b, s| {
            b.iter(|| bucket_amplitudes(black_box(s), Subsystem::V).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("mcube_point", n), &seq, |b, s| {
            b.iter(|| mcube_point(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn simplex(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimizer");
    for n in [2, 3] {
        let cfg = config(n, 1);
        g.bench_with_input(BenchmarkId::new("single_start", n), &cfg, |b, cfg| {
            b.iter(|| optimize_start(black_box(cfg), 0))
        });
    }
    let cfg = config(3, 64);
    g.sample_size(10);
    g.bench_function("multistart_3x64", |b| b.iter(|| run_multistart(black_box(&cfg)).unwrap()));
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    let env = EnvelopeSpec::default();
    for n in [1, 4] {
        let seq = sequence(n);
        g.bench_with_input(BenchmarkId::new("rk4_sin2", n), &seq, |b, s| {
            b.iter(|| integrate_sequence(black_box(s), &env, env.default_dt()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, propagators, pathways, simplex, oracle);
criterion_main!(benches);
