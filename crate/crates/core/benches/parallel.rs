use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gauss_collocation::convergence::SweepOptions;
use gauss_collocation::ocp::builtin_example;
use gauss_collocation::transcribe::{jacobian_with, residual_with};
use gauss_collocation::{certify, run_sweep, DiffMatrices, DiscreteSolution, Execution};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn certification(c: &mut Criterion) {
    let grid: Vec<usize> = (25..=200).step_by(25).collect();
    let mut group = c.benchmark_group("certify_25_to_200");
    group.sample_size(10);
    for (label, exec) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| certify(black_box(&grid), exec).unwrap())
        });
    }
    group.finish();
}

fn residual_and_jacobian(c: &mut Criterion) {
    let (spec, oracle) = builtin_example();
    let mut group = c.benchmark_group("transcription");
    for n in [50, 200] {
        let dm = DiffMatrices::with_n(n).unwrap();
        let sol = DiscreteSolution::from_oracle(&spec, dm.rule(), &oracle).unwrap();
        for (label, exec) in MODES {
            group.bench_with_input(
                BenchmarkId::new(format!("residual_{label}"), n),
                &n,
                |b, _| b.iter(|| residual_with(&spec, &dm, black_box(&sol), exec).unwrap()),
            );
            group.bench_with_input(
                BenchmarkId::new(format!("jacobian_{label}"), n),
                &n,
                |b, _| b.iter(|| jacobian_with(&spec, &dm, black_box(&sol), exec).unwrap()),
            );
        }
    }
    group.finish();
}

fn cold_sweep(c: &mut Criterion) {
    let (spec, oracle) = builtin_example();
    let ns: Vec<usize> = (5..=41).step_by(4).collect();
    let mut group = c.benchmark_group("cold_sweep_5_to_41");
    group.sample_size(10);
    for (label, exec) in MODES {
        let opts = SweepOptions {
            warm_start: false,
            execution: exec,
            ..SweepOptions::default()
        };
        group.bench_function(label, |b| {
            b.iter(|| run_sweep(&spec, &oracle, black_box(&ns), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, certification, residual_and_jacobian, cold_sweep);
criterion_main!(benches);
