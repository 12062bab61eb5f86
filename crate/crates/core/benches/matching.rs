use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mapevo_core::matcher::{match_with, Execution, MatcherConfig, Strategy};

#[path = "../tests/common/mod.rs"]
mod common;

fn matching(c: &mut Criterion) {
    let vocab = common::vocabulary(77, 5_000);
    let mut group = c.benchmark_group("match_name_0.8");
    group.sample_size(10);
    for n in [2_000, 10_000] {
        let o1 = common::large_ontology(71, "big1", "A", n, &vocab);
        let o2 = common::large_counterpart(72, &o1, "big2", "B", &vocab);
        let config = MatcherConfig::new(Strategy::Name, 0.8);
        for (label, execution) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| match_with(&o1, &o2, &config, execution).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, matching);
criterion_main!(benches);
