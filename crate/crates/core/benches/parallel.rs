//! Sequential against parallel execution on the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use laakso::eigen::{lowest_eigenvalues_with, Method, SolverOptions};
use laakso::graph::{build_graph, discretize_with};
use laakso::heat::{heat_trace_grid, log_grid};
use laakso::spectrum::full_spectrum_with;
use laakso::{Execution, JSequence};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spectrum(c: &mut Criterion) {
    let seq = JSequence::parse("2,3").unwrap();
    let mut g = c.benchmark_group("full_spectrum");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "1e7"), &exec, |b, &exec| {
            b.iter(|| full_spectrum_with(black_box(&seq), 1e7, exec).unwrap())
        });
    }
    g.finish();
}

fn discretization(c: &mut Criterion) {
    let graph = build_graph(&JSequence::parse("2,3").unwrap(), 5).unwrap();
    let mut g = c.benchmark_group("discretize");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, "F5 m=8"), &exec, |b, &exec| {
            b.iter(|| discretize_with(black_box(&graph), 8, exec).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let graph = build_graph(&JSequence::parse("2,3").unwrap(), 5).unwrap();
    let disc = discretize_with(&graph, 16, Execution::Parallel).unwrap();
    let x: Vec<f64> = (0..disc.dimension()).map(|i| (i as f64).sin()).collect();
    let mut g = c.benchmark_group("matvec");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, disc.dimension()), &exec, |b, &exec| {
            b.iter(|| disc.operator.matvec(black_box(&x), exec))
        });
    }
    g.finish();
}

fn heat_grid(c: &mut Criterion) {
    let seq = JSequence::parse("2,3").unwrap();
    let ts = log_grid(1e-9, 1e-5, 200).unwrap();
    let mut g = c.benchmark_group("heat_trace_grid");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, ts.len()), &exec, |b, &exec| {
            b.iter(|| heat_trace_grid(black_box(&seq), &ts, 1e-9, exec).unwrap())
        });
    }
    g.finish();
}

fn lanczos(c: &mut Criterion) {
    let graph = build_graph(&JSequence::parse("2,3").unwrap(), 3).unwrap();
    let disc = discretize_with(&graph, 12, Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("lanczos");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = SolverOptions { method: Method::Lanczos, exec, ..SolverOptions::default() };
        g.bench_with_input(BenchmarkId::new(name, disc.dimension()), &opts, |b, opts| {
            b.iter(|| lowest_eigenvalues_with(black_box(&disc.operator), 40, opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectrum, discretization, matvec, heat_grid, lanczos);
criterion_main!(benches);
