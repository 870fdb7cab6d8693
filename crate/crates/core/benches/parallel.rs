use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use densets::constructions::{bernoulli_ratio, build_partition, ColumnSource};
use densets::density::{density_at, Grid};
use densets::laws::{run_suite, run_suite_sequential, Suite};
use densets::{par, BitSource, EvaluationBudget, PermSpec};

fn identity_suite(c: &mut Criterion) {
    let b = EvaluationBudget::default();
    let mut g = c.benchmark_group("core_suite_40x2000");
    g.sample_size(10);
    g.bench_function("parallel", |bench| {
        bench.iter(|| run_suite(Suite::Core, 40, 1, 2000, b).unwrap())
    });
    g.bench_function("sequential", |bench| {
        bench.iter(|| run_suite_sequential(Suite::Core, 40, 1, 2000, b).unwrap())
    });
    g.finish();
}

fn partition_densities(c: &mut Criterion) {
    let seeds: Vec<u64> = (1..=8).collect();
    let work = |&s: &u64| {
        let p = build_partition(
            ColumnSource::Bits(BitSource::new(s)),
            4,
            EvaluationBudget::default(),
        )
        .unwrap();
        density_at(&p.a(3).unwrap(), 100_000).unwrap()
    };
    let mut g = c.benchmark_group("partition_a3_8_seeds");
    g.sample_size(10);
    g.bench_function("parallel", |bench| bench.iter(|| par::map(&seeds, work)));
    g.bench_function("sequential", |bench| {
        bench.iter(|| par::map_sequential(&seeds, work))
    });
    g.finish();
}

fn probe(c: &mut Criterion) {
    let family = PermSpec::default_family();
    let grid = Grid::default();
    let mut g = c.benchmark_group("probe_bern");
    g.sample_size(10);
    for max_n in [10_000u64, 50_000] {
        g.bench_with_input(BenchmarkId::new("parallel", max_n), &max_n, |bench, &n| {
            bench.iter(|| {
                densets::density::intrinsic_probe_with(
                    || bernoulli_ratio(1, 2, 1),
                    &family,
                    &grid,
                    n,
                )
                .unwrap()
            })
        });
        g.bench_with_input(
            BenchmarkId::new("sequential", max_n),
            &max_n,
            |bench, &n| {
                bench.iter(|| {
                    let a = bernoulli_ratio(1, 2, 1).unwrap();
                    densets::density::intrinsic_probe(&a, &family, &grid, n).unwrap()
                })
            },
        );
    }
    g.finish();
}

criterion_group!(benches, identity_suite, partition_densities, probe);
criterion_main!(benches);
