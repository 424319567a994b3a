use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use eoe_core::graph::{build_complete, build_ring};
use eoe_core::sim::{run_batch, Engine, Execution, Simulator};

const S_GRID: [f64; 3] = [0.2, 1.0, 5.0];

fn batch_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);

    let k6 = build_complete(6).unwrap();
    let ring = build_ring(200).unwrap();
    let cases = [
        ("event/complete-6", Simulator::new(&k6, 2.0, 0.5, 0, Engine::Event).unwrap(), 20_000),
        ("renewal/ring-200", Simulator::new(&ring, 500.0, 1.0, 0, Engine::Renewal).unwrap(), 2_000),
    ];
    for (name, sim, reps) in &cases {
        let modes = [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel { threads: None }),
        ];
        for (mode, exec) in modes {
            group.bench_with_input(BenchmarkId::new(*name, mode), reps, |b, &reps| {
                b.iter(|| black_box(run_batch(sim, reps, 7, &S_GRID, exec).unwrap().mean()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, batch_modes);
criterion_main!(benches);
