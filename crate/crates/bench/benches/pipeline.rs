use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use pcgcn::{
    backward, build_knn, forward, generate_instance, greedy_decode, init_params, solve_exact,
    Setting,
};

fn exact_solver(c: &mut Criterion) {
    let instances: Vec<_> = (0..16)
        .map(|s| generate_instance(50, 5, s).unwrap())
        .collect();
    c.bench_function("solve_exact n=50 p=5", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % instances.len();
            solve_exact(black_box(&instances[i])).unwrap()
        })
    });
}

fn model(c: &mut Criterion) {
    let inst = generate_instance(50, 5, 1).unwrap();
    let labels = solve_exact(&inst).unwrap().labels;
    for setting in [Setting::A, Setting::C] {
        let params = init_params(setting.config(), 0).unwrap();
        let knn = build_knn(&inst, setting.config().k).unwrap();
        c.bench_function(&format!("forward setting {setting}"), |b| {
            b.iter(|| forward(black_box(&params), &inst, &knn).unwrap())
        });
        c.bench_function(&format!("forward+backward setting {setting}"), |b| {
            b.iter_batched(
                || (),
                |_| {
                    let trace = forward(&params, &inst, &knn).unwrap();
                    backward(&params, &trace, &labels, 5).unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
}

fn decoders(c: &mut Criterion) {
    let inst = generate_instance(50, 5, 3).unwrap();
    let probs: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 50.0).collect();
    c.bench_function("greedy_decode n=50", |b| {
        b.iter(|| greedy_decode(&inst, black_box(&probs), 5).unwrap())
    });
}

criterion_group!(benches, exact_solver, model, decoders);
criterion_main!(benches);
