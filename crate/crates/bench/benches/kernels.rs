use clickbuy_core::baseline::{train_forest, ForestConfig};
use clickbuy_core::energy::{cd1_step, Cd1Mode, Rbm};
use clickbuy_core::eval::auc;
use clickbuy_core::features::Dataset;
use clickbuy_core::neural::{Activation, Network};
use clickbuy_core::nmf::{nmf_factorize, NmfConfig};
use clickbuy_core::rng::seeded;
use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use rand::Rng as _;
use std::hint::black_box;

fn uniform(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>())
}

fn labels(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = seeded(seed);
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

fn bench_auc(c: &mut Criterion) {
    let scores: Vec<f64> = uniform(1, 100_000, 1).into_iter().collect();
    let y = labels(100_000, 2);
    c.bench_function("auc 100k", |b| b.iter(|| auc(black_box(&scores), black_box(&y)).unwrap()));
}

fn bench_nmf(c: &mut Criterion) {
    let v = uniform(500, 257, 3);
    let cfg = NmfConfig { rank: 10, max_iters: 50, tol: 0.0, seed: 4 };
    c.bench_function("nmf 500x257 rank 10, 50 iters", |b| b.iter(|| nmf_factorize(black_box(v.view()), &cfg).unwrap()));
}

fn bench_cd1(c: &mut Criterion) {
    let mut rng = seeded(5);
    let rbm = Rbm::init(318, 128, &mut rng);
    let batch = uniform(32, 318, 6).mapv(|x| if x < 0.5 { 0.0 } else { 1.0 });
    c.bench_function("cd1 step 318x128, batch 32", |b| {
        b.iter(|| cd1_step(&rbm, black_box(batch.view()), 0.01, Cd1Mode::Sampled, &mut rng).unwrap())
    });
}

fn bench_backprop(c: &mut Criterion) {
    let mut rng = seeded(7);
    let net = Network::random(318, &[128], Activation::Sigmoid, 0.0, &mut rng);
    let x = uniform(32, 318, 8);
    let y = labels(32, 9);
    c.bench_function("backprop 318-128-2, batch 32", |b| b.iter(|| net.gradients(black_box(x.view()), &y, None).unwrap()));
}

fn bench_forest(c: &mut Criterion) {
    let data = Dataset::from_matrix(uniform(1000, 50, 10), labels(1000, 11)).unwrap();
    let cfg = ForestConfig { n_trees: 20, ..ForestConfig::default() };
    c.bench_function("forest 20 trees, 1000x50", |b| b.iter(|| train_forest(black_box(&data), &cfg, 12).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_auc, bench_nmf, bench_cd1, bench_backprop, bench_forest
}
criterion_main!(kernels);
