//! Path-simulation throughput: rayon fan-out versus the sequential
//! reference, on identical work (identical results by construction).

use bgrad::exec::{map_indexed, map_indexed_seq};
use bgrad::geometry::ModelSpace;
use bgrad::pathsim::{stream_path, PathConfig, PathMode};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn simulate_batch<M>(n: u64, mapper: M) -> f64
where
    M: Fn(u64, fn(u64) -> f64) -> Vec<f64>,
{
    fn one_path(i: u64) -> f64 {
        let space = ModelSpace::flat_torus(1).unwrap();
        let cfg = PathConfig {
            space,
            mode: PathMode::Absorption { y: 2.0 },
            dt: 1e-3,
            max_steps: u64::MAX,
            seed: 99,
            path_index: i,
            ceiling_offset: 4.0,
        };
        let mut occ = 0.0;
        stream_path(&cfg, |ctx| {
            occ += (-ctx.b_pre).exp() * ctx.dt_eff;
        })
        .map(|end| occ + end.tau * 1e-12)
        .unwrap()
    }
    mapper(n, one_path).iter().sum()
}

fn bench_paths(c: &mut Criterion) {
    let n = 192u64;
    let par = simulate_batch(n, |n, f| map_indexed(n, f));
    let seq = simulate_batch(n, |n, f| map_indexed_seq(n, f));
    assert_eq!(par, seq, "parallel and sequential runs must agree bitwise");

    let mut group = c.benchmark_group("background_radiation_batch");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(simulate_batch(n, |n, f| map_indexed(n, f))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(simulate_batch(n, |n, f| map_indexed_seq(n, f))))
    });
    group.finish();
}

criterion_group!(benches, bench_paths);
criterion_main!(benches);
