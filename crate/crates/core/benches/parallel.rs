//! Compares the data-parallel batch estimators against single-threaded
//! execution of the same code.
//!
//! With the `parallel` feature (default) both variants run the rayon path,
//! pinned to a one-thread pool for the sequential baseline; without it only
//! the sequential fallback exists, so both groups measure the same thing.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use smpret::kernel::{derive_views, DerivedKernelViews, OvernightChain, SemiMarkovKernel};
use smpret::simulate::{mc_fpt_survival, simulate_smp, ModelKind, SimConfig};
use smpret::state::StateSpace;

fn bench_instance() -> (DerivedKernelViews, StateSpace, OvernightChain) {
    let space = StateSpace::log_symmetric(0.01, 2, 2).unwrap();
    let m = 5;
    let t_max = 12;
    let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
    for i in 0..m {
        let mut total = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            for t in 1..=t_max {
                let w = (1.0 + ((i + 2 * j + t) % 5) as f64) / (t as f64 + 2.0);
                b[i][j][t] = w;
                total += w;
            }
        }
        for j in 0..m {
            for t in 1..=t_max {
                b[i][j][t] /= total;
            }
        }
    }
    let kernel = SemiMarkovKernel::from_increments(m, t_max, b).unwrap();
    (derive_views(&kernel), space, OvernightChain::uniform(m))
}

fn run_mc(views: &DerivedKernelViews, space: &StateSpace, chain: &OvernightChain, paths: usize) {
    let curve =
        mc_fpt_survival(views, chain, space, 2, 0, 1.0053, 100, 200, paths, 42).unwrap();
    criterion::black_box(curve.survival);
}

fn run_sim_batch(
    views: &DerivedKernelViews,
    chain: &OvernightChain,
    reps: usize,
) {
    let paths = smpret::par::map_indexed(reps, |r| {
        let cfg = SimConfig {
            seed: 1000,
            stream: r as u64,
            days: 5,
            n: 200,
            initial_state: 2,
            initial_backward: 0,
            model: ModelKind::SemiMarkov,
        };
        simulate_smp(views, chain, &cfg).unwrap().intraday_len()
    });
    criterion::black_box(paths);
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        (
            "sequential",
            rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap(),
        ),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn bench_mc_fpt(c: &mut Criterion) {
    let (views, space, chain) = bench_instance();
    let mut group = c.benchmark_group("mc_fpt_survival");
    let paths = 50_000;

    #[cfg(feature = "parallel")]
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new(name, paths), &paths, |bch, &paths| {
            bch.iter(|| pool.install(|| run_mc(&views, &space, &chain, paths)));
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_with_input(
        BenchmarkId::new("sequential-fallback", paths),
        &paths,
        |bch, &paths| {
            bch.iter(|| run_mc(&views, &space, &chain, paths));
        },
    );
    group.finish();
}

fn bench_simulation_batch(c: &mut Criterion) {
    let (views, _space, chain) = bench_instance();
    let mut group = c.benchmark_group("simulate_batch");
    let reps = 256;

    #[cfg(feature = "parallel")]
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new(name, reps), &reps, |bch, &reps| {
            bch.iter(|| pool.install(|| run_sim_batch(&views, &chain, reps)));
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_with_input(
        BenchmarkId::new("sequential-fallback", reps),
        &reps,
        |bch, &reps| {
            bch.iter(|| run_sim_batch(&views, &chain, reps));
        },
    );
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_mc_fpt, bench_simulation_batch
}
criterion_main!(benches);
