use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use winocnn_bench::conv_workload;
use winocnn_core::{explore, parse_model, simulate_layer, AcceleratorConfig, Budgets};

fn simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_layer");
    group.sample_size(10);
    for (m, n, q) in [(1, 1, 1), (2, 2, 2), (4, 2, 4)] {
        let w = conv_workload(4, 3, 8, 8, 16);
        let cfg = AcceleratorConfig::new(4, m, n, q, 4096, 1024);
        group.bench_function(BenchmarkId::from_parameter(format!("M{m} N{n} Q{q}")), |b| {
            b.iter(|| simulate_layer(&w.layer, &cfg, black_box(&w.images), &w.weights).unwrap())
        });
    }
    group.finish();
}

fn exploration(c: &mut Criterion) {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/vgg16.model");
    let net = parse_model(path, Some(4)).unwrap();
    let budgets = Budgets { dsp: 360, bram: 432, freq_hz: 250e6, bandwidth: 10.664e9 };
    let mut group = c.benchmark_group("explore");
    group.sample_size(10);
    group.bench_function("vgg16_ultra96", |b| b.iter(|| explore(black_box(&net.layers), &budgets, 4).unwrap()));
    group.finish();
}

criterion_group!(benches, simulate, exploration);
criterion_main!(benches);
