//! Compares the data-parallel and sequential batch samplers on the flight
//! configurations of the verification matrix.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use npme::flight::{batch_sample_with, ExecMode};
use npme::kernel::{FlightCase, NpmeParams};

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_sample");
    let rows = [
        ("d1_n3", 3usize, 1usize, 2.0, FlightCase::D1),
        ("dir_a_d3_n2", 2, 3, 1.5, FlightCase::DirA),
        ("dir_b_d5_n1", 1, 5, 1.0, FlightCase::DirB),
    ];
    let count = 20_000;
    for (label, n, d, alpha, case) in rows {
        let params = NpmeParams::from_flight(n, d, alpha, case).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", label), &params, |b, p| {
            b.iter(|| {
                batch_sample_with(count, 1.0, n, case, p, 7, 1, ExecMode::Sequential).unwrap()
            })
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", label), &params, |b, p| {
            b.iter(|| {
                let workers = std::thread::available_parallelism().map_or(4, |w| w.get());
                batch_sample_with(count, 1.0, n, case, p, 7, workers, ExecMode::Parallel).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
