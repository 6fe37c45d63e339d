//! Monte Carlo throughput with the rayon trial loop versus the sequential one.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncim_papr::harness::{run_ccdf, ExperimentSpec};
use ncim_papr::{Execution, FrameConfig, SchemeId};

const TRIALS: u64 = 64;

fn ccdf_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("ccdf");
    group.sample_size(10);
    for scheme in [SchemeId::Slm, SchemeId::Pts, SchemeId::Heuristic, SchemeId::OslmP1] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut spec = ExperimentSpec::new(FrameConfig::reference(), scheme, TRIALS, 1);
            spec.execution = exec;
            let label = if exec.is_parallel() { "parallel" } else { "sequential" };
            group.bench_with_input(BenchmarkId::new(scheme.name(), label), &spec, |b, spec| {
                b.iter(|| black_box(run_ccdf(spec).unwrap()))
            });
        }
    }
    group.finish();
}

fn ilp_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("ccdf-small");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut spec = ExperimentSpec::new(FrameConfig::small(), SchemeId::IlpP4, TRIALS, 1);
        spec.execution = exec;
        let label = if exec.is_parallel() { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::new("ilp-p4", label), &spec, |b, spec| {
            b.iter(|| black_box(run_ccdf(spec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, ccdf_trials, ilp_trials);
criterion_main!(benches);
