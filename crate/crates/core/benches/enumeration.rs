use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use condni::examples;
use condni::oracle::oracle_check_with;
use condni::par::Exec;
use condni::semantics::right_consistent_bounded_with;
use condni::words::DEFAULT_WORD_LIMIT;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, bound) in [("chinese-wall", 8), ("bookkeeping", 5)] {
        let ex = examples::example(name).unwrap();
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| {
                    oracle_check_with(
                        &ex.machine,
                        &ex.policy,
                        black_box(bound),
                        exec,
                        DEFAULT_WORD_LIMIT,
                    )
                    .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn consistency(c: &mut Criterion) {
    let mut group = c.benchmark_group("consistency");
    group.sample_size(10);
    // Right-consistent, so the whole space up to the bound is searched.
    let ex = examples::two_stage_downgrade();
    let sig = ex.machine.signature();
    for (mode, exec) in MODES {
        group.bench_function(BenchmarkId::new(mode, "two-stage-right"), |b| {
            b.iter(|| {
                right_consistent_bounded_with(
                    &ex.policy,
                    sig,
                    black_box(7),
                    exec,
                    DEFAULT_WORD_LIMIT,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, oracle, consistency);
criterion_main!(benches);
