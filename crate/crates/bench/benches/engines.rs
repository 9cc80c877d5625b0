use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stabilab_core::dual::dual_bound_mmm;
use stabilab_core::market::{simulate_heston_market, HestonParams, TimeGrid};
use stabilab_core::primal::{lsmc_hedge, HedgeBasis};
use stabilab_core::riccati::{mmm_power_moment, DEFAULT_RTOL};
use stabilab_core::rng::RandomStream;
use stabilab_core::utility::{ClaimSpec, ConjugatePair, UtilitySpec};

fn params() -> HestonParams {
    HestonParams::new(0.5, 2.0, 1.0, 1.0, 1.0, 0.3, 1.0).unwrap()
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_heston_market");
    group.sample_size(10);
    for paths in [1_000usize, 4_000] {
        let grid = TimeGrid::new(1.0, 128).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(paths), &paths, |b, &n| {
            b.iter(|| simulate_heston_market(&params(), &grid, &RandomStream::new(1), black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn dual(c: &mut Criterion) {
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let bundle = simulate_heston_market(&params(), &grid, &RandomStream::new(2), 4_000).unwrap();
    let pair = ConjugatePair::new(UtilitySpec::power(0.5).unwrap());
    let claim = ClaimSpec::logistic(-2.0, 401).unwrap();
    c.bench_function("dual_bound_mmm_claim", |b| {
        b.iter(|| dual_bound_mmm(black_box(1.0), &pair, Some(&claim), &bundle).unwrap())
    });
    c.bench_function("riccati_power_moment", |b| {
        b.iter(|| mmm_power_moment(&params(), black_box(-1.0), DEFAULT_RTOL).unwrap())
    });
}

fn hedge(c: &mut Criterion) {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let p = params().with_rho(0.0).unwrap();
    let bundle = simulate_heston_market(&p, &grid, &RandomStream::new(3), 2_000).unwrap();
    let claim = ClaimSpec::logistic(-2.0, 401).unwrap();
    let mut group = c.benchmark_group("lsmc_hedge");
    group.sample_size(10);
    group.bench_function("default_basis", |b| b.iter(|| lsmc_hedge(&claim, &bundle, HedgeBasis::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, simulation, dual, hedge);
criterion_main!(benches);
