use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use n4ck::par;
use n4ck::proofs::corpus;
use n4ck::search::{find_countermodel, random_formula, Logic, SearchBudget};
use n4ck::syntax::Conn;
use n4ck::translate::{faithfulness_harness, HarnessConfig, Mapping};

const PROP: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp];

fn brute_force_batch() {
    par::map_range(200, |i| {
        let f = random_formula(&mut ChaCha8Rng::seed_from_u64(i as u64), 3, 3, PROP);
        find_countermodel(Logic::N4, &[], &[f], &SearchBudget::exhaustive(2)).is_ok()
    });
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("workloads");
    group.sample_size(10);
    for (mode, sequential) in [("parallel", false), ("sequential", true)] {
        par::set_sequential(sequential);
        group.bench_function(BenchmarkId::new("corpus_check", mode), |b| b.iter(|| corpus().check_all()));
        group.bench_function(BenchmarkId::new("harness_e", mode), |b| {
            b.iter(|| faithfulness_harness(&Mapping::E, &HarnessConfig::new(40, 1)).unwrap())
        });
        group.bench_function(BenchmarkId::new("brute_force_n4", mode), |b| b.iter(brute_force_batch));
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
