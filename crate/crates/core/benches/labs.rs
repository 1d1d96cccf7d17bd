use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use decoherent_histories::consistency::{brute_force_consistency_with, decoherence_functional_with};
use decoherent_histories::perturbation::{default_grid, robustness_scan_with};
use decoherent_histories::search::{random_family, search_with, SearchSpec, SearchTarget, StateKind};
use decoherent_histories::{Exec, Tolerance};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn family(dim: usize, events: usize, outcomes: usize) -> SearchSpec {
    let mut spec = SearchSpec::new(SearchTarget::WeakNotStrong, dim, events, 0.1, 3);
    spec.outcomes = outcomes;
    spec.state = StateKind::Mixed;
    spec
}

fn functional(c: &mut Criterion) {
    let mut group = c.benchmark_group("decoherence_functional");
    for (dim, events, outcomes) in [(4, 2, 4), (8, 3, 4)] {
        let (f, rho) = random_family(&family(dim, events, outcomes)).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("d{dim}n{events}")), &exec, |b, &exec| {
                b.iter(|| decoherence_functional_with(black_box(&f), &rho, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force");
    let (f, rho) = random_family(&family(8, 3, 4)).unwrap();
    let tol = Tolerance::default();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| brute_force_consistency_with(black_box(&f), &rho, tol, exec).unwrap()));
    }
    group.finish();
}

fn robustness(c: &mut Criterion) {
    let mut group = c.benchmark_group("robustness_scan");
    let (f, rho) = random_family(&family(4, 2, 2)).unwrap();
    let grid = default_grid(2).unwrap();
    let tol = Tolerance::default();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| robustness_scan_with(black_box(&f), &rho, 1, &grid, tol, exec).unwrap()));
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search_weak_not_strong");
    group.sample_size(10);
    let spec = SearchSpec::new(SearchTarget::WeakNotStrong, 2, 2, 0.2, 42);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| search_with(black_box(&spec), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, functional, brute_force, robustness, search);
criterion_main!(benches);
