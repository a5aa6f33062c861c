use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lanekit_bench::array_add;
use lanekit_core::accel::{AccelConfig, Accelerator, Matrix};
use lanekit_core::hough::{accumulate, find_lines, HoughParams};
use lanekit_core::synth::road_image;
use lanekit_core::{BackendKind, Pipeline, Settings};

fn detect(c: &mut Criterion) {
    let img = road_image(11, 256, 256);
    let mut group = c.benchmark_group("detect_256");
    group.sample_size(20);
    for kind in [BackendKind::ScalarFloat, BackendKind::ScalarFixed, BackendKind::AccelOffload] {
        let settings = Settings::default();
        let mut pipeline = Pipeline::with_backend(&settings, settings.backend_of(kind).unwrap()).unwrap();
        group.bench_function(BenchmarkId::from_parameter(kind.id()), |b| {
            b.iter(|| pipeline.detect(black_box(&img)).unwrap())
        });
    }
    group.finish();
}

fn hough(c: &mut Criterion) {
    let settings = Settings::default();
    let mut pipeline = Pipeline::from_settings(&settings).unwrap();
    let edges = pipeline.detect(&road_image(23, 256, 256)).unwrap().edges.out;
    let params = HoughParams::default();
    c.bench_function("hough_accumulate_256", |b| b.iter(|| accumulate(black_box(&edges), &params)));
    let acc = accumulate(&edges, &params);
    c.bench_function("hough_find_lines_256", |b| b.iter(|| find_lines(black_box(&acc), &params)));
}

fn matmul(c: &mut Criterion) {
    let a = Matrix::from_fn(64, 64, |i, j| ((i * 7 + j) % 255) as i8);
    let w = Matrix::from_fn(64, 64, |i, j| ((i + j * 3) % 255) as i8);
    let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
    c.bench_function("accel_matmul_64", |b| {
        b.iter(|| {
            acc.reset();
            acc.tiled_matmul_auto(black_box(&a), black_box(&w)).unwrap()
        })
    });
}

fn add(c: &mut Criterion) {
    let n = 1 << 20;
    let a: Vec<u32> = (0..n as u32).collect();
    let b = a.clone();
    let mut out = vec![0u32; n];
    let mut group = c.benchmark_group("array_add_1m");
    for workers in [1, 2] {
        group.bench_function(BenchmarkId::from_parameter(workers), |bn| {
            bn.iter(|| array_add(black_box(&a), black_box(&b), &mut out, workers).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, detect, hough, matmul, add);
criterion_main!(benches);
